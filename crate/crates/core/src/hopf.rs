//! The toroidal Hopf maps `χ^(m,n) = f(η) e^{i(nφ + mξ)}`.
//!
//! The profile
//!
//! ```text
//! f(η) = sinh^|n| η · (|m| cosh η + R)^|m| / (|n| cosh η + R)^|n|,   R = √(n² + m² sinh² η)
//! ```
//!
//! solves `f'/f = √(m² + n² / sinh² η)`, which is exactly the condition for
//! `(∇χ)·(∇χ) = 0`. The profile only sees `|m|, |n|`; the phase keeps the signs.

use std::f64::consts::LN_2;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coords::{self, reduce_angle, CartesianPoint, Chart, ToroidalPoint, Vec3};
use crate::error::{Error, Result};

/// Complex 3-vector, e.g. `∇χ` in Cartesian components.
pub type ComplexVec3 = Vector3<Complex64>;

/// Above this η the profile is evaluated in log space.
const LOG_SPACE_ETA: f64 = 20.0;

/// Winding pair `(m, n)` of `χ^(m,n)`: `m` counts turns around ξ, `n` around φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct HopfMapSpec {
    m: i32,
    n: i32,
}

#[derive(Deserialize)]
struct RawSpec {
    m: i32,
    n: i32,
}

impl TryFrom<RawSpec> for HopfMapSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        HopfMapSpec::new(raw.m, raw.n)
    }
}

impl HopfMapSpec {
    pub fn new(m: i32, n: i32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::ZeroWinding { m, n });
        }
        Ok(Self { m, n })
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn n(&self) -> i32 {
        self.n
    }

    /// The Hopf index `m·n`.
    pub fn expected_index(&self) -> i64 {
        self.m as i64 * self.n as i64
    }

    fn abs_mn(&self) -> (f64, f64) {
        (self.m.unsigned_abs() as f64, self.n.unsigned_abs() as f64)
    }

    /// Phase `σ = mξ + nφ`, reduced to `[0, 2π)`.
    pub fn phase_at(&self, t: &ToroidalPoint) -> f64 {
        reduce_angle(self.m as f64 * t.xi + self.n as f64 * t.phi)
    }
}

impl std::fmt::Display for HopfMapSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "chi({},{})", self.m, self.n)
    }
}

fn check_eta(eta: f64, strictly_positive: bool) -> Result<()> {
    let ok = eta.is_finite()
        && if strictly_positive {
            eta > 0.0
        } else {
            eta >= 0.0
        };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "eta must be {} and finite, got {eta}",
            if strictly_positive { "> 0" } else { ">= 0" }
        )))
    }
}

/// Quantities scaled by `2e^{−η}`: `(sinh, cosh, R)` → `(1 − e, 1 + e, R_s)` with `e = e^{−2η}`.
fn scaled(spec: &HopfMapSpec, eta: f64) -> (f64, f64, f64) {
    let (am, an) = spec.abs_mn();
    let e = (-2.0 * eta).exp();
    let sh = -(-2.0 * eta).exp_m1();
    let ch = 1.0 + e;
    let r = (4.0 * an * an * e + am * am * sh * sh).sqrt();
    (sh, ch, r)
}

/// Closed-form profile `f(η)`; `f(0) = 0`, strictly increasing, unbounded.
pub fn profile_f(spec: &HopfMapSpec, eta: f64) -> Result<f64> {
    check_eta(eta, false)?;
    if eta == 0.0 {
        return Ok(0.0);
    }
    if eta > LOG_SPACE_ETA {
        return Ok(profile_ln(spec, eta)?.exp());
    }
    let (am, an) = spec.abs_mn();
    let (sh, ch) = (eta.sinh(), eta.cosh());
    let r = (an * an + am * am * sh * sh).sqrt();
    let num = am * ch + r;
    let den = an * ch + r;
    Ok(sh.powi(spec.n.abs()) * (num.powi(spec.m.abs()) / den.powi(spec.n.abs())))
}

/// `ln f(η)`, valid for every `η > 0` without overflow.
pub fn profile_ln(spec: &HopfMapSpec, eta: f64) -> Result<f64> {
    check_eta(eta, true)?;
    let (am, an) = spec.abs_mn();
    let (sh, ch, r) = scaled(spec, eta);
    Ok(am * (eta - LN_2) + an * sh.ln() + am * (am * ch + r).ln() - an * (an * ch + r).ln())
}

/// `d(ln f)/dη`, obtained by differentiating the closed form.
pub fn profile_log_deriv(spec: &HopfMapSpec, eta: f64) -> Result<f64> {
    check_eta(eta, true)?;
    let (am, an) = spec.abs_mn();
    let (sh, ch, r) = scaled(spec, eta);
    let r_prime = am * am * sh * ch / r;
    Ok(an * ch / sh + am * (am * sh + r_prime) / (am * ch + r)
        - an * (an * sh + r_prime) / (an * ch + r))
}

/// Right-hand side of the profile ODE, `√(m² + n² / sinh² η)`.
pub fn ode_rhs(spec: &HopfMapSpec, eta: f64) -> Result<f64> {
    check_eta(eta, true)?;
    let (am, an) = spec.abs_mn();
    let sh = eta.sinh();
    Ok((am * am + an * an / (sh * sh)).sqrt())
}

/// Solves `f(η) = modulus` for η (the torus carrying a given level value).
pub fn profile_inverse(spec: &HopfMapSpec, modulus: f64) -> Result<f64> {
    if !(modulus.is_finite() && modulus > 0.0) {
        return Err(Error::Domain(format!(
            "level modulus must be positive and finite, got {modulus}"
        )));
    }
    let target = modulus.ln();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while profile_ln(spec, hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::Domain(format!("modulus {modulus} out of range")));
        }
    }
    let mut eta = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = profile_ln(spec, eta)? - target;
        if g > 0.0 {
            hi = eta;
        } else {
            lo = eta;
        }
        if g.abs() < 1e-15 * target.abs().max(1.0) || hi - lo < 1e-15 * hi {
            break;
        }
        // Newton step, falling back to bisection when it leaves the bracket
        let next = eta - g / profile_log_deriv(spec, eta)?;
        eta = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(eta)
}

/// `χ` at a toroidal point.
pub fn evaluate_toroidal(spec: &HopfMapSpec, t: &ToroidalPoint) -> Result<Complex64> {
    let f = profile_f(spec, t.eta)?;
    if f == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let sigma = spec.m as f64 * t.xi + spec.n as f64 * t.phi;
    Ok(Complex64::from_polar(f, sigma))
}

/// `χ^(m,n)(p)`; exactly 0 on the z-axis, an error on the focal circle where `χ = ∞`.
pub fn evaluate(spec: &HopfMapSpec, p: &CartesianPoint) -> Result<Complex64> {
    evaluate_toroidal(spec, &coords::to_toroidal(p)?)
}

/// Analytic gradient
/// `∇χ = q e^{i(mξ+nφ)} (f' ê_η + i m f ê_ξ + (i n / sinh η) f ê_φ)`.
pub fn gradient_analytic(spec: &HopfMapSpec, t: &ToroidalPoint) -> Result<ComplexVec3> {
    let frame = Chart::DEFAULT.frame(t)?;
    let q = t.q();
    let f = profile_f(spec, t.eta)?;
    let fp = f * profile_log_deriv(spec, t.eta)?;
    let sigma = spec.m as f64 * t.xi + spec.n as f64 * t.phi;
    let phase = Complex64::from_polar(q, sigma);
    let i = Complex64::i();
    let c_eta = Complex64::new(fp, 0.0);
    let c_xi = i * (spec.m as f64 * f);
    let c_phi = i * (spec.n as f64 * f / t.eta.sinh());
    let lift = |v: &Vec3| v.map(|c| Complex64::new(c, 0.0));
    Ok(
        (lift(&frame.e_eta) * c_eta + lift(&frame.e_xi) * c_xi + lift(&frame.e_phi) * c_phi)
            * phase,
    )
}

/// Analytic `(∇S, ∇σ)` for `χ = S e^{iσ}`:
/// `∇S = q f' ê_η`, `∇σ = q (m ê_ξ + (n / sinh η) ê_φ)`.
pub fn polar_gradients(spec: &HopfMapSpec, t: &ToroidalPoint) -> Result<(Vec3, Vec3)> {
    let frame = Chart::DEFAULT.frame(t)?;
    let q = t.q();
    let fp = profile_f(spec, t.eta)? * profile_log_deriv(spec, t.eta)?;
    let grad_s = frame.e_eta * (q * fp);
    let grad_sigma =
        (frame.e_xi * spec.m as f64 + frame.e_phi * (spec.n as f64 / t.eta.sinh())) * q;
    Ok((grad_s, grad_sigma))
}

/// The simplest Hopf map in rational form, `i·2(x + iy) / (2z + i(r² − 1))`.
pub fn rational_chi11(p: &CartesianPoint) -> Complex64 {
    let i = Complex64::i();
    let w = Complex64::new(p.x, p.y);
    i * 2.0 * w / Complex64::new(2.0 * p.z, p.r_squared() - 1.0)
}
