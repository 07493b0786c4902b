//! Cartesian and toroidal charts of ℝ³.
//!
//! Toroidal coordinates `(η, ξ, φ)` are built around the focal circle
//! `C = {z = 0, x² + y² = 1}`:
//!
//! ```text
//! x = sinh η cos φ / q,   y = sinh η sin φ / q,   z = sin ξ / q,
//! q = cosh η − cos ξ.
//! ```
//!
//! Surfaces `η = const` are nested tori enclosing `C`; `η = 0` is the z-axis
//! (together with the point at infinity `η = ξ = 0`), and `η → ∞` on `C`.
//! The chart `(η, ξ, φ)` is right-handed: `ê_η × ê_ξ = ê_φ`.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Reduces an angle to `[0, 2π)`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Maps an angle difference to `(−π, π]`.
pub fn wrap_to_pi(a: f64) -> f64 {
    let r = reduce_angle(a);
    if r > std::f64::consts::PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub const ORIGIN: CartesianPoint = CartesianPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// `r² = x² + y² + z²`.
    pub fn r_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// Distance from the z-axis.
    pub fn cylindrical_radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Euclidean distance to the focal circle `C`.
    pub fn distance_to_focal_circle(&self) -> f64 {
        (self.cylindrical_radius() - 1.0).hypot(self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn offset(&self, d: &Vec3) -> Self {
        Self::new(self.x + d.x, self.y + d.y, self.z + d.z)
    }

    pub fn distance(&self, other: &CartesianPoint) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}

/// A point in toroidal coordinates; angles are kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToroidalPoint {
    pub eta: f64,
    pub xi: f64,
    pub phi: f64,
}

impl ToroidalPoint {
    pub fn new(eta: f64, xi: f64, phi: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::Domain(format!(
                "eta must be finite and >= 0, got {eta}"
            )));
        }
        if !(xi.is_finite() && phi.is_finite()) {
            return Err(Error::Domain("toroidal angles must be finite".into()));
        }
        Ok(Self {
            eta,
            xi: reduce_angle(xi),
            phi: reduce_angle(phi),
        })
    }

    /// `q = cosh η − cos ξ`.
    pub fn q(&self) -> f64 {
        scale_factor(self)
    }

    /// On the z-axis φ carries no information and is canonically 0.
    pub fn on_axis(&self) -> bool {
        self.eta == 0.0
    }
}

/// Three mutually orthogonal unit vectors `(ê_η, ê_ξ, ê_φ)` in Cartesian components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub e_eta: Vec3,
    pub e_xi: Vec3,
    pub e_phi: Vec3,
}

impl Frame {
    /// Largest deviation from orthonormality (unit norms and zero pairwise dots).
    pub fn orthonormality_defect(&self) -> f64 {
        let v = [self.e_eta, self.e_xi, self.e_phi];
        let mut worst = 0.0_f64;
        for i in 0..3 {
            worst = worst.max((v[i].norm() - 1.0).abs());
            for j in (i + 1)..3 {
                worst = worst.max(v[i].dot(&v[j]).abs());
            }
        }
        worst
    }
}

/// Numerical thresholds of the toroidal chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    /// Smallest admissible `q`; below it the point is treated as infinity.
    pub eps_q: f64,
    /// Smallest η at which the azimuthal direction is considered defined.
    pub eps_eta: f64,
    /// Largest η returned by [`Chart::to_toroidal`]; beyond it the point is on `C`.
    pub eta_max: f64,
}

pub const EPS_Q: f64 = 1e-12;
pub const EPS_ETA: f64 = 1e-8;
pub const ETA_MAX: f64 = 20.0;

impl Default for Chart {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl Chart {
    pub const DEFAULT: Chart = Chart {
        eps_q: EPS_Q,
        eps_eta: EPS_ETA,
        eta_max: ETA_MAX,
    };

    pub fn to_cartesian(&self, t: &ToroidalPoint) -> Result<CartesianPoint> {
        let q = scale_factor(t);
        if q < self.eps_q {
            return Err(Error::PointAtInfinity { q });
        }
        let s = t.eta.sinh();
        Ok(CartesianPoint::new(
            s * t.phi.cos() / q,
            s * t.phi.sin() / q,
            t.xi.sin() / q,
        ))
    }

    /// Inverts the chart via the distances `d₁, d₂` from `p` to the two points
    /// where `C` pierces the half-plane through the z-axis containing `p`.
    pub fn to_toroidal(&self, p: &CartesianPoint) -> Result<ToroidalPoint> {
        if !p.is_finite() {
            return Err(Error::Domain("Cartesian point must be finite".into()));
        }
        let rho = p.cylindrical_radius();
        let d2_sq = (rho - 1.0).powi(2) + p.z * p.z;
        // η = ½ ln(d₁²/d₂²) with d₁² − d₂² = 4ρ, written to stay accurate near the axis.
        let eta = 0.5 * (4.0 * rho / d2_sq).ln_1p();
        if eta.is_nan() || eta > self.eta_max {
            return Err(Error::OnFocalCircle { eta });
        }
        let xi = reduce_angle((2.0 * p.z).atan2(p.r_squared() - 1.0));
        let phi = if rho == 0.0 {
            0.0
        } else {
            reduce_angle(p.y.atan2(p.x))
        };
        Ok(ToroidalPoint { eta, xi, phi })
    }

    /// Orthonormal frame `(ê_η, ê_ξ, ê_φ)` at `t`, with
    /// `∇η = q ê_η`, `∇ξ = q ê_ξ`, `∇φ = (q / sinh η) ê_φ`.
    pub fn frame(&self, t: &ToroidalPoint) -> Result<Frame> {
        let q = scale_factor(t);
        if q < self.eps_q {
            return Err(Error::PointAtInfinity { q });
        }
        if t.eta < self.eps_eta {
            return Err(Error::AxisDegeneracy { eta: t.eta });
        }
        let (sh, ch) = (t.eta.sinh(), t.eta.cosh());
        let (sx, cx) = t.xi.sin_cos();
        let (sp, cp) = t.phi.sin_cos();
        let rho_hat = Vec3::new(cp, sp, 0.0);
        let z_hat = Vec3::new(0.0, 0.0, 1.0);
        // ∂(ρ, z)/∂η and ∂(ρ, z)/∂ξ, each of length 1/q
        let e_eta = rho_hat * ((1.0 - ch * cx) / q) - z_hat * (sx * sh / q);
        let e_xi = -rho_hat * (sh * sx / q) + z_hat * ((cx * ch - 1.0) / q);
        let e_phi = Vec3::new(-sp, cp, 0.0);
        Ok(Frame {
            e_eta: e_eta.normalize(),
            e_xi: e_xi.normalize(),
            e_phi,
        })
    }
}

pub fn to_cartesian(t: &ToroidalPoint) -> Result<CartesianPoint> {
    Chart::DEFAULT.to_cartesian(t)
}

pub fn to_toroidal(p: &CartesianPoint) -> Result<ToroidalPoint> {
    Chart::DEFAULT.to_toroidal(p)
}

/// `q = cosh η − cos ξ`; never negative.
pub fn scale_factor(t: &ToroidalPoint) -> f64 {
    // cosh η − 1 + (1 − cos ξ), both terms ≥ 0 and free of cancellation
    let a = 2.0 * (0.5 * t.eta).sinh().powi(2);
    let b = 2.0 * (0.5 * t.xi).sin().powi(2);
    a + b
}

pub fn toroidal_frame(t: &ToroidalPoint) -> Result<Frame> {
    Chart::DEFAULT.frame(t)
}
