//! Level curves (fibers) of `χ^(m,n)` and the Hopf index as their linking number.
//!
//! A level set `{χ = c}` lies on the torus `η = f⁻¹(|c|)` and is cut out by
//! `mξ + nφ ≡ arg c (mod 2π)`, which has `gcd(|m|, |n|)` connected components.
//! Each component winds `−n/g` times in ξ and `m/g` times in φ with the
//! orientation used here (tangent `∝ ∇S × ∇σ`).

mod linking;

pub use linking::{gauss_linking, gauss_linking_with, LinkingMethod, LinkingResult};

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coords::{self, wrap_to_pi, CartesianPoint, ToroidalPoint, Vec3};
use crate::error::{Error, Result};
use crate::geometry;
use crate::hopf::{self, HopfMapSpec};

/// Default trace step as a fraction of the torus' minor circumference.
pub const STEP_FRACTION: f64 = 1e-3;

/// Windings are accepted as integers within this tolerance.
const WINDING_TOLERANCE: f64 = 1e-3;

/// Accumulated turns around the two circular directions of a torus, in units of 2π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Windings {
    pub xi: f64,
    pub phi: f64,
}

impl Windings {
    pub fn rounded(&self) -> (i64, i64) {
        (self.xi.round() as i64, self.phi.round() as i64)
    }

    pub fn is_integral(&self, tol: f64) -> bool {
        (self.xi - self.xi.round()).abs() < tol && (self.phi - self.phi.round()).abs() < tol
    }
}

/// A closed (or open) polyline approximating one connected level curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub points: Vec<CartesianPoint>,
    /// When closed, the last point coincides with the first up to the closure tolerance.
    pub closed: bool,
    pub windings: Option<Windings>,
    pub arc_length: f64,
    pub level: Option<Complex64>,
}

impl Fiber {
    /// Wraps an externally supplied polyline.
    pub fn from_points(points: Vec<CartesianPoint>, closed: bool) -> Self {
        let mut arc_length: f64 = points.windows(2).map(|w| w[0].distance(&w[1])).sum();
        if closed && points.len() > 1 {
            arc_length += points[points.len() - 1].distance(&points[0]);
        }
        Self {
            points,
            closed,
            windings: None,
            arc_length,
            level: None,
        }
    }

    /// Segment endpoints, including the closing segment of a closed polyline.
    pub fn segments(&self) -> Vec<(Vec3, Vec3)> {
        let v: Vec<Vec3> = self.points.iter().map(|p| p.to_vector()).collect();
        let mut segs: Vec<(Vec3, Vec3)> = v.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed && v.len() > 2 {
            let (last, first) = (v[v.len() - 1], v[0]);
            if last != first {
                segs.push((last, first));
            }
        }
        segs
    }

    pub fn max_segment_length(&self) -> f64 {
        self.segments()
            .iter()
            .map(|(a, b)| (b - a).norm())
            .fold(0.0, f64::max)
    }

    /// Applies a rigid motion `p ↦ R p + d` to every point.
    pub fn transformed(&self, rotation: &nalgebra::Rotation3<f64>, shift: &Vec3) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| CartesianPoint::from_vector(&(rotation * p.to_vector() + shift)))
            .collect();
        Self {
            points,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Initial (and maximal) arc-length step; `None` picks
    /// [`STEP_FRACTION`] × the minor circumference of the seed's torus.
    pub initial_step: Option<f64>,
    /// Local error tolerance of the adaptive integrator.
    pub tolerance: f64,
    pub closure_tolerance: f64,
    pub max_steps: usize,
    /// Residual tolerance of the level-set corrector (relative in `S`, absolute in σ).
    pub correction_tolerance: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            initial_step: None,
            tolerance: 1e-9,
            closure_tolerance: 1e-6,
            max_steps: 200_000,
            correction_tolerance: 1e-12,
        }
    }
}

impl TraceOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.tolerance)
            && positive(self.closure_tolerance)
            && positive(self.correction_tolerance)
            && self.max_steps > 0
            && self.initial_step.is_none_or(positive))
        {
            return Err(Error::InvalidArgument(
                "trace options must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Step used on the torus `η = eta`.
    pub fn step_for(&self, eta: f64) -> f64 {
        self.initial_step
            .unwrap_or_else(|| STEP_FRACTION * TAU / eta.sinh())
    }
}

/// Unit tangent to the fiber through `p`, `∝ ∇S × ∇σ`.
///
/// With this orientation φ increases along the fiber when `m > 0`.
pub fn fiber_tangent(spec: &HopfMapSpec, p: &CartesianPoint) -> Result<Vec3> {
    geometry::vertical_field(spec, p)
}

/// The point `(η0, σ0/m, 0)` of the level set `{|χ| = f(η0), arg χ = σ0}`.
pub fn seed_on_level_set(spec: &HopfMapSpec, eta0: f64, sigma0: f64) -> Result<CartesianPoint> {
    seed_component(spec, eta0, sigma0, 0)
}

/// A point on the `k`-th connected component of the level set, `k < gcd(|m|, |n|)`.
pub fn seed_component(
    spec: &HopfMapSpec,
    eta0: f64,
    sigma0: f64,
    k: u32,
) -> Result<CartesianPoint> {
    if !(eta0.is_finite() && eta0 > 0.0) {
        return Err(Error::Domain(format!("seed eta must be > 0, got {eta0}")));
    }
    let xi = (sigma0 + TAU * k as f64) / spec.m() as f64;
    coords::to_cartesian(&ToroidalPoint::new(eta0, xi, 0.0)?)
}

/// Number of connected components of a level set: `gcd(|m|, |n|)`.
pub fn component_count(spec: &HopfMapSpec) -> u32 {
    let (mut a, mut b) = (spec.m().unsigned_abs(), spec.n().unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

struct Tracer<'a> {
    spec: &'a HopfMapSpec,
    ln_s0: f64,
    sigma0: f64,
    opts: &'a TraceOptions,
}

impl Tracer<'_> {
    fn rk4(&self, p: &Vec3, h: f64) -> Result<Vec3> {
        let tangent = |v: &Vec3| fiber_tangent(self.spec, &CartesianPoint::from_vector(v));
        let k1 = tangent(p)?;
        let k2 = tangent(&(p + k1 * (0.5 * h)))?;
        let k3 = tangent(&(p + k2 * (0.5 * h)))?;
        let k4 = tangent(&(p + k3 * h))?;
        Ok(p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    }

    /// Newton projection back onto `{ln S = ln S0, σ = σ0}`, moving only
    /// within `span(∇S, ∇σ)` (minimum-norm update).
    fn correct(&self, p: &Vec3) -> Result<Vec3> {
        let mut x = *p;
        let mut residual = f64::INFINITY;
        for _ in 0..20 {
            let cp = CartesianPoint::from_vector(&x);
            let t = coords::to_toroidal(&cp)?;
            let s = hopf::profile_f(self.spec, t.eta)?;
            let r = Vector2::new(
                self.ln_s0 - s.ln(),
                wrap_to_pi(self.sigma0 - self.spec.phase_at(&t)),
            );
            residual = r[0].abs().max(r[1].abs());
            if residual < self.opts.correction_tolerance {
                return Ok(x);
            }
            let (grad_s, grad_sigma) = hopf::polar_gradients(self.spec, &t)?;
            let g_ln = grad_s / s;
            let gram = Matrix2::new(
                g_ln.dot(&g_ln),
                g_ln.dot(&grad_sigma),
                grad_sigma.dot(&g_ln),
                grad_sigma.dot(&grad_sigma),
            );
            let coef = gram
                .try_inverse()
                .ok_or(Error::CorrectorDiverged { residual })?
                * r;
            x += g_ln * coef[0] + grad_sigma * coef[1];
        }
        Err(Error::CorrectorDiverged { residual })
    }

    fn advance(&self, p: &Vec3, h: f64) -> Result<Vec3> {
        self.correct(&self.rk4(p, h)?)
    }
}

/// Traces the closed level curve through `seed`.
///
/// Adaptive RK4 (step doubling) along [`fiber_tangent`], each accepted step
/// followed by the level-set corrector. Terminates once the curve returns to
/// the seed with integral windings.
pub fn trace_fiber(
    spec: &HopfMapSpec,
    seed: &CartesianPoint,
    opts: &TraceOptions,
) -> Result<Fiber> {
    opts.validate()?;
    let t0 = coords::to_toroidal(seed)?;
    let level = hopf::evaluate_toroidal(spec, &t0)?;
    if level.norm() == 0.0 {
        return Err(Error::ZeroModulus);
    }
    let tracer = Tracer {
        spec,
        ln_s0: level.norm().ln(),
        sigma0: spec.phase_at(&t0),
        opts,
    };
    let h_max = opts.step_for(t0.eta);
    let seed_v = seed.to_vector();

    let mut points = vec![*seed];
    let mut p = seed_v;
    let mut t_prev = t0;
    let (mut turns_xi, mut turns_phi) = (0.0_f64, 0.0_f64);
    let mut arc_length = 0.0;
    let mut h = h_max;
    let mut steps = 0;

    let accumulate = |t_prev: &ToroidalPoint, t: &ToroidalPoint| {
        (wrap_to_pi(t.xi - t_prev.xi), wrap_to_pi(t.phi - t_prev.phi))
    };

    while steps < opts.max_steps {
        let to_seed = seed_v - p;
        let d = to_seed.norm();
        if arc_length > 2.0 * h_max && d <= h_max {
            let tangent = fiber_tangent(spec, &CartesianPoint::from_vector(&p))?;
            let (dxi, dphi) = accumulate(&t_prev, &t0);
            let closing = Windings {
                xi: (turns_xi + dxi) / TAU,
                phi: (turns_phi + dphi) / TAU,
            };
            let nontrivial = closing.rounded() != (0, 0);
            if nontrivial && closing.is_integral(WINDING_TOLERANCE) && to_seed.dot(&tangent) >= 0.0
            {
                // Step onto the seed: chord length first, then the along-fiber remainder.
                let mut end = if d > opts.closure_tolerance {
                    tracer.advance(&p, d)?
                } else {
                    p
                };
                for _ in 0..2 {
                    let t_end = fiber_tangent(spec, &CartesianPoint::from_vector(&end))?;
                    let remainder = (seed_v - end).dot(&t_end);
                    if remainder.abs() < 0.1 * opts.closure_tolerance {
                        break;
                    }
                    end = tracer.advance(&end, remainder)?;
                }
                if (end - seed_v).norm() < opts.closure_tolerance {
                    let end_p = CartesianPoint::from_vector(&end);
                    let t_end = coords::to_toroidal(&end_p)?;
                    let (dxi, dphi) = accumulate(&t_prev, &t_end);
                    arc_length += (end - p).norm();
                    let windings = Windings {
                        xi: (turns_xi + dxi) / TAU,
                        phi: (turns_phi + dphi) / TAU,
                    };
                    if end != p {
                        points.push(end_p);
                    }
                    return Ok(Fiber {
                        points,
                        closed: true,
                        windings: Some(windings),
                        arc_length,
                        level: Some(level),
                    });
                }
            }
        }

        let full = tracer.rk4(&p, h)?;
        let half = tracer.rk4(&tracer.rk4(&p, 0.5 * h)?, 0.5 * h)?;
        let err = (full - half).norm() / 15.0;
        if err > opts.tolerance {
            h *= (0.9 * (opts.tolerance / err).powf(0.2)).max(0.2);
            if h < 1e-6 * h_max {
                return Err(Error::NoClosure { steps });
            }
            continue;
        }
        let next = tracer.correct(&half)?;
        let next_p = CartesianPoint::from_vector(&next);
        let t_next = coords::to_toroidal(&next_p)?;
        let (dxi, dphi) = accumulate(&t_prev, &t_next);
        turns_xi += dxi;
        turns_phi += dphi;
        arc_length += (next - p).norm();
        points.push(next_p);
        p = next;
        t_prev = t_next;
        steps += 1;
        let grow = if err > 0.0 {
            (0.9 * (opts.tolerance / err).powf(0.2)).min(2.0)
        } else {
            2.0
        };
        h = (h * grow).min(h_max);
    }
    Err(Error::NoClosure { steps })
}

/// Traces every connected component of `{χ = level}`.
pub fn trace_level_set(
    spec: &HopfMapSpec,
    level: Complex64,
    opts: &TraceOptions,
) -> Result<Vec<Fiber>> {
    let eta = hopf::profile_inverse(spec, level.norm())?;
    let sigma = level.arg();
    (0..component_count(spec))
        .map(|k| trace_fiber(spec, &seed_component(spec, eta, sigma, k)?, opts))
        .collect()
}

/// Tori and phases of the two level sets linked by [`hopf_index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSetup {
    pub etas: [f64; 2],
    pub sigmas: [f64; 2],
}

impl Default for IndexSetup {
    fn default() -> Self {
        Self {
            etas: [0.6, 1.2],
            sigmas: [0.0, 1.0],
        }
    }
}

impl IndexSetup {
    pub fn levels(&self, spec: &HopfMapSpec) -> Result<[Complex64; 2]> {
        let level = |k: usize| -> Result<Complex64> {
            Ok(Complex64::from_polar(
                hopf::profile_f(spec, self.etas[k])?,
                self.sigmas[k],
            ))
        };
        Ok([level(0)?, level(1)?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfIndexReport {
    /// Linking of the full level sets, summed over component pairs.
    pub total: LinkingResult,
    /// Linking of one component of each level set.
    pub per_component: LinkingResult,
    /// `gcd(|m|, |n|)`.
    pub components: u32,
}

/// Traces every component of two level sets and sums the linking over all
/// component pairs (`gcd²` pairs when `gcd(|m|, |n|) > 1`).
pub fn hopf_index_report(
    spec: &HopfMapSpec,
    setup: &IndexSetup,
    opts: &TraceOptions,
) -> Result<HopfIndexReport> {
    let [la, lb] = setup.levels(spec)?;
    let a = trace_level_set(spec, la, opts)?;
    let b = trace_level_set(spec, lb, opts)?;
    Ok(HopfIndexReport {
        total: total_linking(&a, &b)?,
        per_component: gauss_linking(&a[0], &b[0])?,
        components: component_count(spec),
    })
}

/// The Hopf index of `χ^(m,n)` as the linking number of two level sets; equals `m·n`.
pub fn hopf_index(spec: &HopfMapSpec, opts: &TraceOptions) -> Result<LinkingResult> {
    Ok(hopf_index_report(spec, &IndexSetup::default(), opts)?.total)
}

/// Linking number of two unions of fibers: the sum over all pairs.
pub fn total_linking(a: &[Fiber], b: &[Fiber]) -> Result<LinkingResult> {
    let mut raw = Vec::with_capacity(a.len() * b.len());
    for fa in a {
        for fb in b {
            raw.push(gauss_linking(fa, fb)?.raw);
        }
    }
    Ok(LinkingResult::from_raw(crate::calculus::compensated_sum(
        raw,
    )))
}

/// Linking of the full preimages `χ⁻¹(levels_a)` and `χ⁻¹(levels_b)`, tracing
/// every component of every level.
pub fn preimage_linking(
    spec: &HopfMapSpec,
    levels_a: &[Complex64],
    levels_b: &[Complex64],
    opts: &TraceOptions,
) -> Result<LinkingResult> {
    let trace_all = |levels: &[Complex64]| -> Result<Vec<Fiber>> {
        let mut out = Vec::new();
        for &c in levels {
            out.extend(trace_level_set(spec, c, opts)?);
        }
        Ok(out)
    };
    total_linking(&trace_all(levels_a)?, &trace_all(levels_b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: i32, n: i32) -> HopfMapSpec {
        HopfMapSpec::new(m, n).unwrap()
    }

    #[test]
    fn component_counts() {
        assert_eq!(component_count(&spec(1, 1)), 1);
        assert_eq!(component_count(&spec(2, 2)), 2);
        assert_eq!(component_count(&spec(2, 3)), 1);
        assert_eq!(component_count(&spec(-3, 3)), 3);
        assert_eq!(component_count(&spec(2, -2)), 2);
    }

    /// Brute force: the level set meets the circle φ = 0 at ξ_k = (σ0 + 2πk)/m,
    /// k = 0..|m|. Following the curve once around φ maps ξ_k to ξ_{k−n mod |m|};
    /// components are the orbits of that permutation.
    fn enumerated_components(m: i32, n: i32) -> u32 {
        let size = m.unsigned_abs() as i64;
        let mut seen = vec![false; size as usize];
        let mut orbits = 0;
        for start in 0..size {
            if seen[start as usize] {
                continue;
            }
            orbits += 1;
            let mut k = start;
            while !seen[k as usize] {
                seen[k as usize] = true;
                k = (k - n as i64).rem_euclid(size);
            }
        }
        orbits
    }

    #[test]
    fn component_count_matches_enumeration() {
        for m in -3..=3 {
            for n in -3..=3 {
                if m == 0 || n == 0 {
                    continue;
                }
                assert_eq!(
                    component_count(&spec(m, n)),
                    enumerated_components(m, n),
                    "({m},{n})"
                );
            }
        }
    }

    #[test]
    fn seed_examples() {
        let s = spec(1, 1);
        let eta0 = 0.7;
        let p = seed_on_level_set(&s, eta0, 0.0).unwrap();
        let t = coords::to_toroidal(&p).unwrap();
        assert!((t.eta - eta0).abs() < 1e-12);
        assert!(t.xi.min(TAU - t.xi) < 1e-12 && t.phi == 0.0);

        for (m, n) in [(2, 3), (-1, 2), (3, -2)] {
            let s = spec(m, n);
            let sigma0 = 2.5;
            let p = seed_on_level_set(&s, 0.9, sigma0).unwrap();
            let v = hopf::evaluate(&s, &p).unwrap();
            assert!(wrap_to_pi(v.arg() - sigma0).abs() < 1e-10);
            assert!((v.norm() - hopf::profile_f(&s, 0.9).unwrap()).abs() < 1e-10);
        }
        assert!(seed_on_level_set(&s, 0.0, 0.0).is_err());
    }

    #[test]
    fn tangent_is_vertical() {
        let s = spec(1, 1);
        let p = seed_on_level_set(&s, 0.8, 1.0).unwrap();
        let t = coords::to_toroidal(&p).unwrap();
        let tangent = fiber_tangent(&s, &p).unwrap();
        let frame = coords::toroidal_frame(&t).unwrap();
        assert!(tangent.dot(&frame.e_eta).abs() < 1e-8);
        let (gs, gsig) = hopf::polar_gradients(&s, &t).unwrap();
        assert!(tangent.dot(&gs).abs() < 1e-8 * gs.norm());
        assert!(tangent.dot(&gsig).abs() < 1e-8 * gsig.norm());
        // φ advances for m, n > 0
        assert!(tangent.dot(&frame.e_phi) > 0.0);
    }

    #[test]
    fn simplest_fiber_closes_once_around_each_direction() {
        let s = spec(1, 1);
        let seed = seed_on_level_set(&s, 1f64.asinh(), 0.0).unwrap();
        let fiber = trace_fiber(&s, &seed, &TraceOptions::default()).unwrap();
        assert!(fiber.closed);
        let w = fiber.windings.unwrap();
        assert!(w.is_integral(1e-3));
        assert_eq!(w.rounded(), (-1, 1));
        assert!(fiber.points.last().unwrap().distance(&seed) < 1e-6);
    }

    #[test]
    fn fibers_follow_the_winding_constraint() {
        for (m, n) in [(2, 3), (2, 2), (-1, 2)] {
            let s = spec(m, n);
            let seed = seed_on_level_set(&s, 0.8, 0.3).unwrap();
            let fiber = trace_fiber(&s, &seed, &TraceOptions::default()).unwrap();
            let (wx, wp) = fiber.windings.unwrap().rounded();
            assert_eq!(m as i64 * wx + n as i64 * wp, 0, "({m},{n})");
            let g = component_count(&s) as i64;
            assert_eq!(
                (wx.abs(), wp.abs()),
                ((n as i64 / g).abs(), (m as i64 / g).abs())
            );
            assert_eq!(wp.signum(), (m as i64).signum());
        }
    }

    #[test]
    fn no_closure_within_step_budget() {
        let s = spec(2, 3);
        let seed = seed_on_level_set(&s, 0.8, 0.0).unwrap();
        let opts = TraceOptions {
            max_steps: 50,
            ..TraceOptions::default()
        };
        assert!(matches!(
            trace_fiber(&s, &seed, &opts),
            Err(Error::NoClosure { steps: 50 })
        ));
    }

    #[test]
    fn axis_seed_is_rejected() {
        let s = spec(1, 1);
        assert!(trace_fiber(
            &s,
            &CartesianPoint::new(0.0, 0.0, 0.4),
            &TraceOptions::default()
        )
        .is_err());
    }
}
