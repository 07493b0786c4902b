//! Finite-difference calculus on complex scalar fields and eikonal residual diagnostics.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{self, CartesianPoint, Vec3};
use crate::error::{Error, Result};
use crate::hopf::{self, ComplexVec3, HopfMapSpec};

/// Default central-difference step, in units of the focal-circle radius.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Below this gradient energy the normalized residual is declared 0.
const DEGENERATE_DENOMINATOR: f64 = 1e-30;

/// A complex-valued field on ℝ³.
///
/// Evaluation must be deterministic and reentrant. Singular loci are reported
/// as errors rather than NaN.
pub trait ScalarField: Send + Sync {
    fn evaluate(&self, p: &CartesianPoint) -> Result<Complex64>;

    /// Human-readable provenance: base map plus applied transformations.
    fn describe(&self) -> String;
}

pub type SharedField = Arc<dyn ScalarField>;

impl<F: ScalarField + ?Sized> ScalarField for Arc<F> {
    fn evaluate(&self, p: &CartesianPoint) -> Result<Complex64> {
        (**self).evaluate(p)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn evaluate(&self, p: &CartesianPoint) -> Result<Complex64> {
        (**self).evaluate(p)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl ScalarField for HopfMapSpec {
    fn evaluate(&self, p: &CartesianPoint) -> Result<Complex64> {
        hopf::evaluate(self, p)
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

/// Built-in control fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlField {
    /// A constant; its gradient vanishes.
    Constant(Complex64),
    /// `x + 2iy`: not a solution, residual `−3` everywhere.
    XPlus2iY,
    /// `x + iy`: a planar solution.
    XPlusIY,
    /// `e^{x + iy}`: modulus `e^x`, phase `y`.
    Exponential,
}

impl ControlField {
    /// Looks up a control by its registry name.
    pub fn from_name(name: &str) -> Option<Self> {
        let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "x+2iy" => Some(Self::XPlus2iY),
            "x+iy" => Some(Self::XPlusIY),
            "const" => Some(Self::Constant(Complex64::new(1.0, 0.0))),
            "exp" => Some(Self::Exponential),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 4] = ["x+2iy", "x+iy", "const", "exp"];
}

impl ScalarField for ControlField {
    fn evaluate(&self, p: &CartesianPoint) -> Result<Complex64> {
        Ok(match self {
            Self::Constant(c) => *c,
            Self::XPlus2iY => Complex64::new(p.x, 2.0 * p.y),
            Self::XPlusIY => Complex64::new(p.x, p.y),
            Self::Exponential => Complex64::new(p.x, p.y).exp(),
        })
    }

    fn describe(&self) -> String {
        match self {
            Self::Constant(c) => format!("const({c})"),
            Self::XPlus2iY => "x+2iy".into(),
            Self::XPlusIY => "x+iy".into(),
            Self::Exponential => "exp(x+iy)".into(),
        }
    }
}

fn stencil_value<F: ScalarField + ?Sized>(field: &F, p: &CartesianPoint) -> Result<Complex64> {
    match field.evaluate(p) {
        Ok(v) if v.re.is_finite() && v.im.is_finite() => Ok(v),
        Ok(_) => Err(Error::StencilSingular(Box::new(Error::Domain(
            "non-finite field value".into(),
        )))),
        Err(e) => Err(Error::StencilSingular(Box::new(e))),
    }
}

/// The two stencil points along axis `k`, plus the spacing actually realized
/// in floating point (`(p_k + h) − (p_k − h)`).
fn stencil(p: &CartesianPoint, k: usize, h: f64) -> (CartesianPoint, CartesianPoint, f64) {
    let mut plus = p.to_vector();
    let mut minus = plus;
    plus[k] += h;
    minus[k] -= h;
    let spacing = plus[k] - minus[k];
    (
        CartesianPoint::from_vector(&plus),
        CartesianPoint::from_vector(&minus),
        spacing,
    )
}

fn check_step(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )))
    }
}

/// Central-difference gradient of a complex field.
pub fn fd_gradient<F: ScalarField + ?Sized>(
    field: &F,
    p: &CartesianPoint,
    h: f64,
) -> Result<ComplexVec3> {
    check_step(h)?;
    let mut g = ComplexVec3::zeros();
    for k in 0..3 {
        let (plus, minus, spacing) = stencil(p, k, h);
        g[k] = (stencil_value(field, &plus)? - stencil_value(field, &minus)?) / spacing;
    }
    Ok(g)
}

/// Directional central difference of a complex field along `dir`.
pub fn fd_directional<F: ScalarField + ?Sized>(
    field: &F,
    p: &CartesianPoint,
    dir: &Vec3,
    h: f64,
) -> Result<Complex64> {
    check_step(h)?;
    let plus = stencil_value(field, &p.offset(&(dir * h)))?;
    let minus = stencil_value(field, &p.offset(&(dir * -h)))?;
    Ok((plus - minus) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EikonalResidual {
    /// `Σ_k (∂_k χ)²`, the unconjugated square.
    pub raw: Complex64,
    /// `|raw| / Σ_k |∂_k χ|²`; 0 when the denominator is below 1e-30.
    pub normalized: f64,
}

impl EikonalResidual {
    pub fn from_gradient(g: &ComplexVec3) -> Self {
        let raw = g.dot(g);
        let energy: f64 = g.iter().map(|c| c.norm_sqr()).sum();
        let normalized = if energy < DEGENERATE_DENOMINATOR {
            0.0
        } else {
            raw.norm() / energy
        };
        Self { raw, normalized }
    }
}

pub fn eikonal_residual<F: ScalarField + ?Sized>(
    field: &F,
    p: &CartesianPoint,
    h: f64,
) -> Result<EikonalResidual> {
    Ok(EikonalResidual::from_gradient(&fd_gradient(field, p, h)?))
}

/// FD differentials of the modulus `S` and phase `σ` of a field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGradients {
    pub modulus: f64,
    pub grad_modulus: Vec3,
    pub grad_phase: Vec3,
}

/// Central differences of `|χ|` and `arg χ`; the phase is unwrapped locally
/// against the center value so the branch cut never enters a difference.
pub fn fd_polar_gradients<F: ScalarField + ?Sized>(
    field: &F,
    p: &CartesianPoint,
    h: f64,
) -> Result<PolarGradients> {
    check_step(h)?;
    let center = stencil_value(field, p)?;
    let modulus = center.norm();
    if modulus == 0.0 {
        return Err(Error::ZeroModulus);
    }
    let mut grad_modulus = Vec3::zeros();
    let mut grad_phase = Vec3::zeros();
    for k in 0..3 {
        let (plus, minus, spacing) = stencil(p, k, h);
        let vp = stencil_value(field, &plus)?;
        let vm = stencil_value(field, &minus)?;
        if vp.norm() == 0.0 || vm.norm() == 0.0 {
            return Err(Error::ZeroModulus);
        }
        grad_modulus[k] = (vp.norm() - vm.norm()) / spacing;
        grad_phase[k] = ((vp / center).arg() - (vm / center).arg()) / spacing;
    }
    Ok(PolarGradients {
        modulus,
        grad_modulus,
        grad_phase,
    })
}

/// The real form of the eikonal equation, `∇S·∇σ = 0` and `|∇S|² = S²|∇σ|²`,
/// as dimensionless residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitResiduals {
    pub orthogonality: f64,
    pub balance: f64,
}

impl SplitResiduals {
    pub fn from_polar(pg: &PolarGradients) -> Self {
        let (gs, gp, s) = (&pg.grad_modulus, &pg.grad_phase, pg.modulus);
        let norms = gs.norm() * gp.norm();
        let orthogonality = if norms > 0.0 {
            gs.dot(gp).abs() / norms
        } else {
            0.0
        };
        let a = gs.norm_squared();
        let b = s * s * gp.norm_squared();
        let balance = if a + b > 0.0 {
            (a - b).abs() / (a + b)
        } else {
            0.0
        };
        Self {
            orthogonality,
            balance,
        }
    }
}

pub fn split_residuals<F: ScalarField + ?Sized>(
    field: &F,
    p: &CartesianPoint,
    h: f64,
) -> Result<SplitResiduals> {
    Ok(SplitResiduals::from_polar(&fd_polar_gradients(
        field, p, h,
    )?))
}

/// Where sample points are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Region {
    /// Uniform in an axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Uniform in `η ∈ [eta_min, eta_max]` and in both angles.
    Toroidal { eta_min: f64, eta_max: f64 },
}

/// A reproducible sampling of ℝ³ with exclusion tubes around the singular loci.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub region: Region,
    /// Number of candidate points drawn.
    pub samples: usize,
    /// Tube radius around the focal circle `C`.
    pub circle_exclusion: f64,
    /// Tube radius around the z-axis.
    pub axis_exclusion: f64,
    pub seed: u64,
}

pub const DEFAULT_CIRCLE_EXCLUSION: f64 = 0.05;
pub const DEFAULT_AXIS_EXCLUSION: f64 = 0.05;

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            region: Region::Box {
                min: [-2.0; 3],
                max: [2.0; 3],
            },
            samples: 1000,
            circle_exclusion: DEFAULT_CIRCLE_EXCLUSION,
            axis_exclusion: DEFAULT_AXIS_EXCLUSION,
            seed: 0,
        }
    }
}

impl SamplingSpec {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.circle_exclusion > 0.0 && self.axis_exclusion > 0.0) {
            return Err(Error::InvalidArgument("exclusion radii must be > 0".into()));
        }
        match self.region {
            Region::Box { min, max } => {
                if (0..3).any(|k| min[k].is_nan() || max[k].is_nan() || min[k] >= max[k]) {
                    return Err(Error::InvalidArgument("empty sampling box".into()));
                }
            }
            Region::Toroidal { eta_min, eta_max } => {
                if !(eta_min >= 0.0 && eta_min < eta_max && eta_max.is_finite()) {
                    return Err(Error::InvalidArgument("invalid eta range".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_excluded(&self, p: &CartesianPoint) -> bool {
        p.distance_to_focal_circle() < self.circle_exclusion
            || p.cylindrical_radius() < self.axis_exclusion
    }

    /// Draws the candidate points and splits them into kept points and an
    /// excluded count. Deterministic in `seed`.
    pub fn draw(&self) -> Result<(Vec<CartesianPoint>, usize)> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut kept = Vec::with_capacity(self.samples);
        let mut excluded = 0;
        for _ in 0..self.samples {
            let p = match self.region {
                Region::Box { min, max } => CartesianPoint::new(
                    rng.gen_range(min[0]..max[0]),
                    rng.gen_range(min[1]..max[1]),
                    rng.gen_range(min[2]..max[2]),
                ),
                Region::Toroidal { eta_min, eta_max } => {
                    let t = coords::ToroidalPoint::new(
                        rng.gen_range(eta_min..=eta_max),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )?;
                    match coords::to_cartesian(&t) {
                        Ok(p) => p,
                        Err(_) => {
                            excluded += 1;
                            continue;
                        }
                    }
                }
            };
            if self.is_excluded(&p) {
                excluded += 1;
            } else {
                kept.push(p);
            }
        }
        Ok((kept, excluded))
    }
}

/// Aggregate statistics of the normalized eikonal residual over a sampling set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub field: String,
    /// Points successfully evaluated.
    pub samples: usize,
    pub h: f64,
    pub max: f64,
    pub mean: f64,
    pub p99: f64,
    /// Points dropped by the exclusion tubes or failing to evaluate.
    pub excluded: usize,
    pub sampling: SamplingSpec,
}

/// Neumaier-compensated sum; order-dependent only at the last bit.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn residual_scan<F: ScalarField + ?Sized>(
    field: &F,
    sampling: &SamplingSpec,
    h: f64,
) -> Result<ResidualReport> {
    check_step(h)?;
    let (points, mut excluded) = sampling.draw()?;
    // Evaluated concurrently, collected in draw order.
    let results: Vec<Option<f64>> = points
        .par_iter()
        .map(|p| eikonal_residual(field, p, h).ok().map(|r| r.normalized))
        .collect();
    let mut values: Vec<f64> = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Some(v) => values.push(v),
            None => excluded += 1,
        }
    }
    if values.is_empty() {
        return Err(Error::AllPointsExcluded);
    }
    let mean = compensated_sum(values.iter().copied()) / values.len() as f64;
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(ResidualReport {
        field: field.describe(),
        samples: values.len(),
        h,
        max: *sorted.last().unwrap(),
        mean,
        p99: percentile(&sorted, 99.0),
        excluded,
        sampling: *sampling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::gradient_analytic;

    const C0: Complex64 = Complex64::new(0.0, 0.0);

    #[test]
    fn constant_field_has_zero_gradient() {
        let f = ControlField::Constant(Complex64::new(2.0, -1.0));
        let g = fd_gradient(&f, &CartesianPoint::new(0.3, -1.2, 0.7), 1e-5).unwrap();
        assert!(g.iter().all(|c| *c == C0));
        let r = eikonal_residual(&f, &CartesianPoint::new(0.3, -1.2, 0.7), 1e-5).unwrap();
        assert_eq!(r.normalized, 0.0);
    }

    #[test]
    fn linear_controls_are_exact() {
        let p = CartesianPoint::new(0.3, -1.7, 0.2);
        let g = fd_gradient(&ControlField::XPlus2iY, &p, 1e-5).unwrap();
        assert_eq!(g[0], Complex64::new(1.0, 0.0));
        assert_eq!(g[1], Complex64::new(0.0, 2.0));
        assert_eq!(g[2], C0);
        let r = eikonal_residual(&ControlField::XPlus2iY, &p, 1e-5).unwrap();
        assert_eq!(r.raw, Complex64::new(-3.0, 0.0));
        assert_eq!(r.normalized, 0.6);

        let r = eikonal_residual(&ControlField::XPlusIY, &p, 1e-5).unwrap();
        assert_eq!(r.raw, C0);
    }

    #[test]
    fn fd_matches_analytic_gradient_for_simplest_map() {
        let spec = HopfMapSpec::new(1, 1).unwrap();
        let p = CartesianPoint::new(0.4, -0.3, 0.6);
        let t = coords::to_toroidal(&p).unwrap();
        let analytic = gradient_analytic(&spec, &t).unwrap();
        let fd = fd_gradient(&spec, &p, 1e-5).unwrap();
        assert!((fd - analytic).norm() < 1e-6 * analytic.norm());
    }

    #[test]
    fn exponential_control_splits_cleanly() {
        let s = split_residuals(
            &ControlField::Exponential,
            &CartesianPoint::new(0.2, 3.1, -0.4),
            1e-5,
        )
        .unwrap();
        assert!(s.orthogonality < 1e-9);
        assert!(s.balance < 1e-9);
    }

    #[test]
    fn non_solution_has_nonzero_balance() {
        // ∇S = (x, 4y)/S, ∇σ = (−2y, 2x)/S²: orthogonal only by accident, never balanced
        let s = split_residuals(
            &ControlField::XPlus2iY,
            &CartesianPoint::new(1.0, 1.0, 0.0),
            1e-5,
        )
        .unwrap();
        // |∇S|² = 17/5, S²|∇σ|² = 8/5 → balance = 9/25
        assert!((s.balance - 9.0 / 25.0).abs() < 1e-8, "{}", s.balance);
    }

    #[test]
    fn split_rejects_zero_modulus() {
        let spec = HopfMapSpec::new(1, 1).unwrap();
        let err = split_residuals(&spec, &CartesianPoint::new(0.0, 0.0, 0.5), 1e-5).unwrap_err();
        assert_eq!(err, Error::ZeroModulus);
    }

    #[test]
    fn stencil_on_focal_circle_errors() {
        let spec = HopfMapSpec::new(1, 1).unwrap();
        // the +x stencil point lands exactly on the focal circle
        let err = fd_gradient(&spec, &CartesianPoint::new(0.5, 0.0, 0.0), 0.5).unwrap_err();
        assert!(matches!(err, Error::StencilSingular(_)));
        assert!(fd_gradient(&spec, &CartesianPoint::ORIGIN, 0.0).is_err());
    }

    #[test]
    fn scan_of_controls() {
        let sampling = SamplingSpec::default().with_samples(200).with_seed(3);
        let report = residual_scan(&ControlField::XPlus2iY, &sampling, DEFAULT_STEP).unwrap();
        assert_eq!(report.mean, 0.6);
        assert_eq!(report.max, 0.6);
        assert_eq!(report.samples + report.excluded, 200);

        let report = residual_scan(&ControlField::Constant(C0), &sampling, DEFAULT_STEP).unwrap();
        assert_eq!(report.max, 0.0);
    }

    #[test]
    fn scan_errors_when_everything_is_excluded() {
        let sampling = SamplingSpec {
            region: Region::Box {
                min: [-0.01, -0.01, -1.0],
                max: [0.01, 0.01, 1.0],
            },
            ..SamplingSpec::default()
        };
        assert_eq!(
            residual_scan(&ControlField::XPlusIY, &sampling, DEFAULT_STEP).unwrap_err(),
            Error::AllPointsExcluded
        );
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 99.0), 99.0);
        assert_eq!(percentile(&v[..1], 99.0), 1.0);
    }
}
