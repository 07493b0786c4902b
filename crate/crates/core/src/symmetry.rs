//! New solutions from old: holomorphic maps of the target and conformal maps of ℝ³.
//!
//! If `χ` solves `(∇χ)·(∇χ) = 0` then so do `F ∘ χ` for holomorphic `F` (chain
//! rule) and `χ ∘ T⁻¹` for conformal `T` (the equation is conformally covariant).

use std::fmt;
use std::sync::Arc;

use nalgebra::{Rotation3, Unit};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{ScalarField, SharedField};
use crate::coords::{CartesianPoint, Vec3};
use crate::error::{Error, Result};

/// Target values closer than this to a registered pole are rejected.
pub const POLE_EPSILON: f64 = 1e-9;

/// A complex polynomial, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    pub fn monomial(degree: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = Complex64::new(1.0, 0.0);
        Self::new(coeffs)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, w: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::new(vec![]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// All complex roots (Durand–Kerner, Newton-polished).
    pub fn roots(&self) -> Vec<Complex64> {
        let d = self.degree();
        if d == 0 {
            return Vec::new();
        }
        let lead = self.coeffs[d];
        let monic: Vec<Complex64> = self.coeffs.iter().map(|c| c / lead).collect();
        let monic = Polynomial::new(monic);
        let bound = 1.0
            + monic.coeffs[..d]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
        let seed = Complex64::new(0.4, 0.9);
        let mut z: Vec<Complex64> = (0..d)
            .map(|k| seed.powu(k as u32) * (0.5 * bound))
            .collect();
        for _ in 0..1000 {
            let mut change = 0.0_f64;
            for i in 0..d {
                let denom = (0..d)
                    .filter(|&j| j != i)
                    .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z[i] - z[j]));
                if denom.norm() == 0.0 {
                    z[i] += Complex64::new(1e-8 * bound, 1e-8 * bound);
                    change = f64::INFINITY;
                    continue;
                }
                let delta = monic.eval(z[i]) / denom;
                z[i] -= delta;
                change = change.max(delta.norm());
            }
            if change < 1e-15 * bound {
                break;
            }
        }
        let dp = monic.derivative();
        for r in z.iter_mut() {
            for _ in 0..3 {
                let slope = dp.eval(*r);
                if slope.norm() == 0.0 {
                    break;
                }
                *r -= monic.eval(*r) / slope;
            }
        }
        z
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(format_complex).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

fn format_complex(c: &Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else {
        format!("{}{:+}i", c.re, c.im)
    }
}

/// Parses `1`, `-2.5`, `2i`, `-i`, `1+2i`, `3e-1-4i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidArgument(format!("cannot parse complex number '{s}'"));
    let num = |t: &str| -> Result<f64> { t.parse::<f64>().map_err(|_| bad()) };
    let imag_coef = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => num(t),
        }
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(num(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(num(&body[..k])?, imag_coef(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag_coef(body)?)),
    }
}

/// Comma-separated coefficient list, ascending powers: `"0,0,1"` is `w²`.
pub fn parse_polynomial(s: &str) -> Result<Polynomial> {
    let coeffs = s
        .split(',')
        .map(parse_complex)
        .collect::<Result<Vec<_>>>()?;
    Ok(Polynomial::new(coeffs))
}

/// A holomorphic map of the target plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TargetMap {
    Polynomial(Polynomial),
    /// `P/Q` with the zeros of `Q` registered as poles.
    Rational {
        numerator: Polynomial,
        denominator: Polynomial,
        poles: Vec<Complex64>,
    },
}

impl TargetMap {
    pub fn identity() -> Self {
        TargetMap::Polynomial(Polynomial::monomial(1))
    }

    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        TargetMap::Polynomial(Polynomial::new(coeffs))
    }

    pub fn rational(numerator: Polynomial, denominator: Polynomial) -> Result<Self> {
        if denominator.coeffs.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let poles = denominator.roots();
        Ok(TargetMap::Rational {
            numerator,
            denominator,
            poles,
        })
    }

    pub fn poles(&self) -> &[Complex64] {
        match self {
            TargetMap::Polynomial(_) => &[],
            TargetMap::Rational { poles, .. } => poles,
        }
    }

    /// Topological degree as a map of the Riemann sphere.
    pub fn degree(&self) -> usize {
        match self {
            TargetMap::Polynomial(p) => p.degree(),
            TargetMap::Rational {
                numerator,
                denominator,
                ..
            } => numerator.degree().max(denominator.degree()),
        }
    }

    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        match self {
            TargetMap::Polynomial(p) => Ok(p.eval(w)),
            TargetMap::Rational {
                numerator,
                denominator,
                poles,
            } => {
                let distance = poles
                    .iter()
                    .map(|z| (w - z).norm())
                    .fold(f64::INFINITY, f64::min);
                if distance < POLE_EPSILON {
                    return Err(Error::PoleHit { distance });
                }
                Ok(numerator.eval(w) / denominator.eval(w))
            }
        }
    }

    pub fn derivative(&self, w: Complex64) -> Result<Complex64> {
        match self {
            TargetMap::Polynomial(p) => Ok(p.derivative().eval(w)),
            TargetMap::Rational {
                numerator,
                denominator,
                ..
            } => {
                self.eval(w)?;
                let (p, q) = (numerator.eval(w), denominator.eval(w));
                let (dp, dq) = (
                    numerator.derivative().eval(w),
                    denominator.derivative().eval(w),
                );
                Ok((dp * q - p * dq) / (q * q))
            }
        }
    }
}

impl TargetMap {
    /// All solutions of `F(w) = c`. Fails when `c` is a critical value
    /// (repeated solutions), where the preimage is not a regular level set.
    pub fn preimages(&self, c: Complex64) -> Result<Vec<Complex64>> {
        let shifted = match self {
            TargetMap::Polynomial(p) => {
                let mut coeffs = p.coeffs.clone();
                coeffs[0] -= c;
                Polynomial::new(coeffs)
            }
            TargetMap::Rational {
                numerator,
                denominator,
                ..
            } => {
                let len = numerator.coeffs.len().max(denominator.coeffs.len());
                let coeff = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or_default();
                Polynomial::new(
                    (0..len)
                        .map(|k| coeff(&numerator.coeffs, k) - c * coeff(&denominator.coeffs, k))
                        .collect(),
                )
            }
        };
        if shifted.degree() == 0 {
            return Err(Error::Domain(format!(
                "F(w) = {c} has no isolated solutions"
            )));
        }
        let roots = shifted.roots();
        let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        for (i, a) in roots.iter().enumerate() {
            if roots[i + 1..].iter().any(|b| (a - b).norm() < 1e-8 * scale) {
                return Err(Error::Domain(format!("{c} is a critical value of {self}")));
            }
        }
        Ok(roots)
    }
}

impl fmt::Display for TargetMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetMap::Polynomial(p) => write!(f, "poly{p}"),
            TargetMap::Rational {
                numerator,
                denominator,
                ..
            } => write!(f, "rational{numerator}/{denominator}"),
        }
    }
}

/// Generators of the conformal group of ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConformalPrimitive {
    Translation {
        shift: [f64; 3],
    },
    /// Right-handed rotation about a unit axis.
    Rotation {
        axis: [f64; 3],
        angle: f64,
    },
    Dilation {
        scale: f64,
    },
    /// `x ↦ x / |x|²`, inversion in the unit sphere.
    Inversion,
}

fn invert(v: &Vec3) -> Result<Vec3> {
    let r2 = v.norm_squared();
    if r2 == 0.0 {
        return Err(Error::InversionSingular);
    }
    Ok(v / r2)
}

impl ConformalPrimitive {
    pub fn translation(shift: Vec3) -> Self {
        Self::Translation {
            shift: shift.into(),
        }
    }

    pub fn rotation(axis: Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0 && n.is_finite() && angle.is_finite()) {
            return Err(Error::InvalidArgument(
                "rotation axis must be nonzero".into(),
            ));
        }
        Ok(Self::Rotation {
            axis: (axis / n).into(),
            angle,
        })
    }

    pub fn dilation(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dilation must be > 0, got {scale}"
            )));
        }
        Ok(Self::Dilation { scale })
    }

    fn rotation_matrix(axis: &[f64; 3], angle: f64) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::from(*axis)), angle)
    }

    pub fn apply(&self, v: &Vec3) -> Result<Vec3> {
        Ok(match self {
            Self::Translation { shift } => v + Vec3::from(*shift),
            Self::Rotation { axis, angle } => Self::rotation_matrix(axis, *angle) * v,
            Self::Dilation { scale } => v * *scale,
            Self::Inversion => invert(v)?,
        })
    }

    pub fn apply_inverse(&self, v: &Vec3) -> Result<Vec3> {
        Ok(match self {
            Self::Translation { shift } => v - Vec3::from(*shift),
            Self::Rotation { axis, angle } => Self::rotation_matrix(axis, -*angle) * v,
            Self::Dilation { scale } => v / *scale,
            Self::Inversion => invert(v)?,
        })
    }

    /// Parses `translate:x,y,z`, `rotate:ax,ay,az,angle`, `dilate:s`, `invert`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse transform '{s}'"));
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let values: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        match (name.trim(), values.as_slice()) {
            ("translate", [x, y, z]) => Ok(Self::translation(Vec3::new(*x, *y, *z))),
            ("rotate", [x, y, z, a]) => Self::rotation(Vec3::new(*x, *y, *z), *a),
            ("dilate", [s]) => Self::dilation(*s),
            ("invert", []) => Ok(Self::Inversion),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ConformalPrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Translation { shift } => {
                write!(f, "translate({},{},{})", shift[0], shift[1], shift[2])
            }
            Self::Rotation { axis, angle } => {
                write!(f, "rotate({},{},{};{})", axis[0], axis[1], axis[2], angle)
            }
            Self::Dilation { scale } => write!(f, "dilate({scale})"),
            Self::Inversion => write!(f, "invert"),
        }
    }
}

/// A composition of conformal primitives, applied first to last.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BaseConformalMap {
    steps: Vec<ConformalPrimitive>,
}

impl BaseConformalMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(steps: Vec<ConformalPrimitive>) -> Self {
        Self { steps }
    }

    pub fn steps(&self) -> &[ConformalPrimitive] {
        &self.steps
    }

    /// `other ∘ self`: apply `self`, then `other`.
    pub fn then(&self, other: &BaseConformalMap) -> Self {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Self { steps }
    }

    pub fn apply(&self, p: &CartesianPoint) -> Result<CartesianPoint> {
        let mut v = p.to_vector();
        for step in &self.steps {
            v = step.apply(&v)?;
        }
        Ok(CartesianPoint::from_vector(&v))
    }

    pub fn apply_inverse(&self, p: &CartesianPoint) -> Result<CartesianPoint> {
        let mut v = p.to_vector();
        for step in self.steps.iter().rev() {
            v = step.apply_inverse(&v)?;
        }
        Ok(CartesianPoint::from_vector(&v))
    }
}

impl fmt::Display for BaseConformalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return write!(f, "id");
        }
        let parts: Vec<String> = self.steps.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// `p ↦ F(field(p))`.
pub struct ComposedField {
    inner: SharedField,
    map: TargetMap,
}

impl ScalarField for ComposedField {
    fn evaluate(&self, p: &CartesianPoint) -> Result<Complex64> {
        self.map.eval(self.inner.evaluate(p)?)
    }

    fn describe(&self) -> String {
        format!("{}∘{}", self.map, self.inner.describe())
    }
}

/// `p ↦ field(T⁻¹(p))`.
pub struct TransformedField {
    inner: SharedField,
    transform: BaseConformalMap,
}

impl ScalarField for TransformedField {
    fn evaluate(&self, p: &CartesianPoint) -> Result<Complex64> {
        self.inner.evaluate(&self.transform.apply_inverse(p)?)
    }

    fn describe(&self) -> String {
        format!("{}∘[{}]⁻¹", self.inner.describe(), self.transform)
    }
}

pub fn compose_target(field: SharedField, map: TargetMap) -> SharedField {
    Arc::new(ComposedField { inner: field, map })
}

pub fn transform_base(field: SharedField, transform: BaseConformalMap) -> SharedField {
    Arc::new(TransformedField {
        inner: field,
        transform,
    })
}
