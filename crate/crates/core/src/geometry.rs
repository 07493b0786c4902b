//! Vertical/horizontal splitting induced by `χ^(m,n)` and the conformal
//! comparison of the horizontal metric with the flat target metric
//! `dρ² + ρ² dφ²`.
//!
//! All frames are unit-normalized with respect to the Euclidean metric of ℝ³.
//! In the basis of differentials `(dS, dσ)` the horizontal metric is
//! `H = (J Jᵀ)⁻¹` with `J = [[dS(e1), dS(e2)], [dσ(e1), dσ(e2)]]`; it is
//! conformal to `diag(1, S²)` exactly when `χ` solves the eikonal equation.

use nalgebra::{Matrix2, Matrix3};
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{
    fd_directional, fd_polar_gradients, SamplingSpec, SplitResiduals, DEFAULT_STEP,
};
use crate::coords::{self, CartesianPoint, Vec3};
use crate::error::{Error, Result};
use crate::hopf::{self, HopfMapSpec};

/// `|∇S × ∇σ|` below this fraction of `|∇S||∇σ|` counts as degenerate.
const INDEPENDENCE_TOLERANCE: f64 = 1e-10;

/// `e1, e2` span the horizontal plane, `e3` the fiber direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFrame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub e3: Vec3,
}

impl SplitFrame {
    fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.e1, self.e2, self.e3])
    }

    pub fn orthonormality_defect(&self) -> f64 {
        (self.matrix().transpose() * self.matrix() - Matrix3::identity())
            .abs()
            .max()
    }
}

/// Covectors dual to a [`SplitFrame`], `(ω_i, e_j) = δ_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoFrame {
    pub omega1: Vec3,
    pub omega2: Vec3,
    pub omega3: Vec3,
}

impl CoFrame {
    /// `max |(ω_i, e_j) − δ_ij|`.
    pub fn duality_defect(&self, frame: &SplitFrame) -> f64 {
        let w = Matrix3::from_rows(&[
            self.omega1.transpose(),
            self.omega2.transpose(),
            self.omega3.transpose(),
        ]);
        (w * frame.matrix() - Matrix3::identity()).abs().max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConformalCheckResult {
    /// Local scale factor `H₁₁ / T₁₁`.
    pub lambda: f64,
    pub offdiag_residual: f64,
    pub proportionality_residual: f64,
}

fn analytic_polar(spec: &HopfMapSpec, p: &CartesianPoint) -> Result<(Vec3, Vec3)> {
    let t = coords::to_toroidal(p)?;
    let (grad_s, grad_sigma) = hopf::polar_gradients(spec, &t).map_err(|e| match e {
        Error::AxisDegeneracy { .. } | Error::PointAtInfinity { .. } => Error::DegenerateJacobian,
        other => other,
    })?;
    let cross = grad_s.cross(&grad_sigma);
    let scale = grad_s.norm() * grad_sigma.norm();
    if !(scale.is_finite() && cross.norm() > INDEPENDENCE_TOLERANCE * scale && scale > 0.0) {
        return Err(Error::DegenerateJacobian);
    }
    Ok((grad_s, grad_sigma))
}

/// Unit vector along `∇S × ∇σ`, the direction annihilated by `dχ`.
pub fn vertical_field(spec: &HopfMapSpec, p: &CartesianPoint) -> Result<Vec3> {
    let (grad_s, grad_sigma) = analytic_polar(spec, p)?;
    Ok(grad_s.cross(&grad_sigma).normalize())
}

/// Right-handed split frame with `e1 ∥ ∇S`, `e3` vertical and `e2 = e3 × e1`.
pub fn split_frame(spec: &HopfMapSpec, p: &CartesianPoint) -> Result<SplitFrame> {
    let (grad_s, grad_sigma) = analytic_polar(spec, p)?;
    let e3 = grad_s.cross(&grad_sigma).normalize();
    let e1 = grad_s.normalize();
    let e2 = e3.cross(&e1);
    Ok(SplitFrame { e1, e2, e3 })
}

/// Rows of the inverse-transpose of the frame matrix.
pub fn coframe(frame: &SplitFrame) -> Result<CoFrame> {
    let inv = frame
        .matrix()
        .try_inverse()
        .ok_or(Error::DegenerateJacobian)?;
    Ok(CoFrame {
        omega1: inv.row(0).transpose(),
        omega2: inv.row(1).transpose(),
        omega3: inv.row(2).transpose(),
    })
}

/// The Euclidean metric restricted to `span(e1, e2)`, in the `(dS, dσ)` basis.
pub fn horizontal_metric(spec: &HopfMapSpec, p: &CartesianPoint) -> Result<Matrix2<f64>> {
    horizontal_metric_with_step(spec, p, DEFAULT_STEP)
}

pub fn horizontal_metric_with_step(
    spec: &HopfMapSpec,
    p: &CartesianPoint,
    h: f64,
) -> Result<Matrix2<f64>> {
    let frame = split_frame(spec, p)?;
    let pg = fd_polar_gradients(spec, p, h)?;
    let (ds, dsigma) = (pg.grad_modulus, pg.grad_phase);
    let j = Matrix2::new(
        ds.dot(&frame.e1),
        ds.dot(&frame.e2),
        dsigma.dot(&frame.e1),
        dsigma.dot(&frame.e2),
    );
    let dual = j * j.transpose();
    dual.try_inverse().ok_or(Error::DegenerateJacobian)
}

/// Flat metric `dρ² + ρ² dφ²` in the `(dρ, dφ)` basis.
pub fn target_metric(rho: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, rho * rho)
}

/// Compares the horizontal metric with `target_metric(S)` under `ρ ↔ S`, `φ ↔ σ`.
pub fn conformal_check(spec: &HopfMapSpec, p: &CartesianPoint) -> Result<ConformalCheckResult> {
    let h = horizontal_metric(spec, p)?;
    let s = hopf::evaluate(spec, p)?.norm();
    if s <= 0.0 {
        return Err(Error::ZeroModulus);
    }
    let t = target_metric(s);
    let lambda = h[(0, 0)] / t[(0, 0)];
    Ok(ConformalCheckResult {
        lambda,
        offdiag_residual: h[(0, 1)].abs() / (h[(0, 0)] * h[(1, 1)]).sqrt(),
        proportionality_residual: (h[(1, 1)] / t[(1, 1)] - lambda).abs() / lambda,
    })
}

/// Closed-form scale factor between the horizontal metric and the target metric,
/// `λ = t² / (q² f² (n² + m² t²))` with `t = sinh η` and `f` the profile.
pub fn conformal_factor(spec: &HopfMapSpec, p: &CartesianPoint) -> Result<f64> {
    let tp = coords::to_toroidal(p)?;
    let t = tp.eta.sinh();
    let q = tp.q();
    let f = hopf::profile_f(spec, tp.eta)?;
    let (m, n) = (spec.m() as f64, spec.n() as f64);
    Ok(t * t / (q * q * f * f * (n * n + m * m * t * t)))
}

/// Every geometric residual at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointChecks {
    /// `|dχ(e3)| / |∇χ|`, with `dχ(e3)` by central differences.
    pub vertical_annihilation: f64,
    pub frame_orthonormality: f64,
    pub coframe_duality: f64,
    pub conformal: ConformalCheckResult,
    /// Relative deviation of the measured `λ` from [`conformal_factor`].
    pub lambda_closed_form: f64,
    pub split: SplitResiduals,
}

pub fn check_point(spec: &HopfMapSpec, p: &CartesianPoint, h: f64) -> Result<PointChecks> {
    let frame = split_frame(spec, p)?;
    let co = coframe(&frame)?;
    let t = coords::to_toroidal(p)?;
    let grad = hopf::gradient_analytic(spec, &t)?;
    let grad_norm = grad.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let along = fd_directional(spec, p, &frame.e3, h)?;
    let conformal = conformal_check(spec, p)?;
    let lambda = conformal_factor(spec, p)?;
    Ok(PointChecks {
        vertical_annihilation: along.norm() / grad_norm,
        frame_orthonormality: frame.orthonormality_defect(),
        coframe_duality: co.duality_defect(&frame),
        conformal,
        lambda_closed_form: (conformal.lambda - lambda).abs() / lambda,
        split: SplitResiduals::from_polar(&fd_polar_gradients(spec, p, h)?),
    })
}

/// Maxima of [`PointChecks`] over a sampling set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryReport {
    pub samples: usize,
    pub excluded: usize,
    pub vertical_annihilation: f64,
    pub frame_orthonormality: f64,
    pub coframe_duality: f64,
    pub conformal_offdiag: f64,
    pub conformal_proportionality: f64,
    pub lambda_closed_form: f64,
    pub lambda_min: f64,
    pub split_orthogonality: f64,
    pub split_balance: f64,
}

/// Runs [`check_point`] over `sampling`; points where a check is undefined
/// (degenerate Jacobian, stencil hitting a singularity) count as excluded.
pub fn geometry_scan(
    spec: &HopfMapSpec,
    sampling: &SamplingSpec,
    h: f64,
) -> Result<GeometryReport> {
    let (points, mut excluded) = sampling.draw()?;
    let checks: Vec<Option<PointChecks>> = points
        .par_iter()
        .map(|p| check_point(spec, p, h).ok())
        .collect();
    let kept: Vec<PointChecks> = checks
        .into_iter()
        .filter_map(|c| {
            if c.is_none() {
                excluded += 1;
            }
            c
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::AllPointsExcluded);
    }
    let max = |f: fn(&PointChecks) -> f64| kept.iter().map(f).fold(0.0, f64::max);
    Ok(GeometryReport {
        samples: kept.len(),
        excluded,
        vertical_annihilation: max(|c| c.vertical_annihilation),
        frame_orthonormality: max(|c| c.frame_orthonormality),
        coframe_duality: max(|c| c.coframe_duality),
        conformal_offdiag: max(|c| c.conformal.offdiag_residual),
        conformal_proportionality: max(|c| c.conformal.proportionality_residual),
        lambda_closed_form: max(|c| c.lambda_closed_form),
        lambda_min: kept
            .iter()
            .map(|c| c.conformal.lambda)
            .fold(f64::INFINITY, f64::min),
        split_orthogonality: max(|c| c.split.orthogonality),
        split_balance: max(|c| c.split.balance),
    })
}
