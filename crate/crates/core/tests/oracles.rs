//! Independent checks of derived reference values: every expected number here
//! is produced by a computation that does not share code with the routine
//! under test (numerical integration, finite differences, hand substitution,
//! brute-force decomposition).

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use hopf_eikonal::coords::{self, CartesianPoint, ToroidalPoint};
use hopf_eikonal::fibers::{self, preimage_linking, IndexSetup, TraceOptions};
use hopf_eikonal::geometry;
use hopf_eikonal::hopf::{self, HopfMapSpec};
use num_complex::Complex64;

fn spec(m: i32, n: i32) -> HopfMapSpec {
    HopfMapSpec::new(m, n).unwrap()
}

#[test]
fn profile_matches_rk4_integration_of_its_ode() {
    // f' = f · √(m² + n²/sinh² η), integrated from η = 0.1 with the closed form as seed.
    let s = spec(2, 1);
    let rhs = |eta: f64, f: f64| f * (4.0 + 1.0 / eta.sinh().powi(2)).sqrt();
    let (a, b) = (0.1, 1.0);
    let steps = 9000;
    let h = (b - a) / steps as f64;
    let mut f = hopf::profile_f(&s, a).unwrap();
    for i in 0..steps {
        let eta = a + i as f64 * h;
        let k1 = rhs(eta, f);
        let k2 = rhs(eta + 0.5 * h, f + 0.5 * h * k1);
        let k3 = rhs(eta + 0.5 * h, f + 0.5 * h * k2);
        let k4 = rhs(eta + h, f + h * k3);
        f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let closed = hopf::profile_f(&s, 1.0).unwrap();
    assert!(
        (closed / f - 1.0).abs() < 1e-8,
        "closed {closed}, integrated {f}"
    );
}

#[test]
fn log_derivative_matches_finite_difference() {
    let s = spec(2, 3);
    let h = 1e-6;
    let ln = |eta: f64| hopf::profile_f(&s, eta).unwrap().ln();
    let fd = (ln(0.5 + h) - ln(0.5 - h)) / (2.0 * h);
    assert!((hopf::profile_log_deriv(&s, 0.5).unwrap() - fd).abs() < 1e-6);
}

#[test]
fn ode_rhs_by_hand_substitution() {
    // √(2² + 3² / sinh²(0.5)) with sinh(0.5) = 0.52109530549374736...
    let expected = 6.094_608_222_968_932;
    assert!((hopf::ode_rhs(&spec(2, 3), 0.5).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn reference_point_substitutions() {
    let t = ToroidalPoint::new(1f64.asinh(), FRAC_PI_2, 0.0).unwrap();
    let p = coords::to_cartesian(&t).unwrap();
    assert!(
        (p.x - 1.0 / SQRT_2).abs() < 1e-15
            && p.y.abs() < 1e-15
            && (p.z - 1.0 / SQRT_2).abs() < 1e-15
    );
    assert!((coords::scale_factor(&t) - SQRT_2).abs() < 1e-15);
    let chi = hopf::evaluate(&spec(1, 1), &p).unwrap();
    assert!((chi - Complex64::i()).norm() < 1e-14);
}

/// Central differences of the coordinate functions themselves.
#[test]
fn frame_matches_finite_difference_of_coordinates() {
    let h = 1e-6;
    for p in [
        CartesianPoint::new(0.4, 0.3, 0.5),
        CartesianPoint::new(-1.3, 0.2, -0.4),
        CartesianPoint::new(0.1, -0.9, 1.1),
    ] {
        let t = coords::to_toroidal(&p).unwrap();
        let frame = coords::toroidal_frame(&t).unwrap();
        let mut grad_eta = coords::Vec3::zeros();
        for k in 0..3 {
            let mut dv = coords::Vec3::zeros();
            dv[k] = h;
            let plus = coords::to_toroidal(&p.offset(&dv)).unwrap();
            let minus = coords::to_toroidal(&p.offset(&-dv)).unwrap();
            grad_eta[k] = (plus.eta - minus.eta) / (2.0 * h);
        }
        assert!((grad_eta.normalize() - frame.e_eta).norm() < 1e-6);
    }
}

#[test]
fn analytic_gradient_matches_finite_difference_of_evaluate() {
    let h = 1e-5;
    for (m, n) in [(1, 1), (2, 3), (-1, 2), (3, -2)] {
        let s = spec(m, n);
        for p in [
            CartesianPoint::new(0.4, 0.3, 0.5),
            CartesianPoint::new(-1.3, 0.2, -0.4),
        ] {
            let t = coords::to_toroidal(&p).unwrap();
            let g = hopf::gradient_analytic(&s, &t).unwrap();
            let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for k in 0..3 {
                let mut dv = coords::Vec3::zeros();
                dv[k] = h;
                let fd = (hopf::evaluate(&s, &p.offset(&dv)).unwrap()
                    - hopf::evaluate(&s, &p.offset(&-dv)).unwrap())
                    / (2.0 * h);
                assert!((fd - g[k]).norm() < 1e-6 * norm, "({m},{n}) component {k}");
            }
        }
    }
}

/// The horizontal metric's scale, measured by finite differences, against
/// `g_h = (t²/t̃²)(1 + t²)/(n² + m²t²)` with `t = sinh η`, `t̃ = f(η)`, after
/// removing the factor `q²(1 + t²)` that relates the q-stripped coordinate
/// metric to the Euclidean one.
#[test]
fn conformal_factor_matches_horizontal_metric_expression() {
    for (m, n) in [(1, 1), (2, 3), (3, 1)] {
        let s = spec(m, n);
        for p in [
            CartesianPoint::new(0.4, 0.3, 0.5),
            CartesianPoint::new(0.9, -1.1, 0.2),
        ] {
            let t = coords::to_toroidal(&p).unwrap();
            let sh = t.eta.sinh();
            let tt = hopf::profile_f(&s, t.eta).unwrap();
            let (mf, nf) = (m as f64, n as f64);
            let g_h = sh * sh / (tt * tt) * (1.0 + sh * sh) / (nf * nf + mf * mf * sh * sh);
            let q = t.q();
            let expected = g_h / (q * q * (1.0 + sh * sh));
            let measured = geometry::conformal_check(&s, &p).unwrap().lambda;
            assert!(
                (measured / expected - 1.0).abs() < 1e-5,
                "({m},{n}): {measured} vs {expected}"
            );
        }
    }
}

#[test]
fn linking_of_simplest_and_coprime_fibers() {
    let opts = TraceOptions::default();
    for (m, n, expected) in [(1, 1, 1), (2, 3, 6)] {
        let s = spec(m, n);
        let a = fibers::trace_fiber(&s, &fibers::seed_on_level_set(&s, 0.6, 0.0).unwrap(), &opts)
            .unwrap();
        let b = fibers::trace_fiber(&s, &fibers::seed_on_level_set(&s, 1.2, 1.0).unwrap(), &opts)
            .unwrap();
        let r = fibers::gauss_linking(&a, &b).unwrap();
        assert_eq!(r.rounded, expected);
        assert!(r.deviation < 0.05);
    }
}

/// For (2,2) every level set has two components; summing the linking over all
/// 2×2 component pairs must agree with per-component linking × gcd².
#[test]
fn two_two_index_by_component_decomposition() {
    let s = spec(2, 2);
    let opts = TraceOptions::default();
    let [la, lb] = IndexSetup::default().levels(&s).unwrap();
    let comps_a = fibers::trace_level_set(&s, la, &opts).unwrap();
    let comps_b = fibers::trace_level_set(&s, lb, &opts).unwrap();
    assert_eq!((comps_a.len(), comps_b.len()), (2, 2));
    for a in &comps_a {
        for b in &comps_b {
            assert_eq!(fibers::gauss_linking(a, b).unwrap().rounded, 1);
        }
    }
    let total = preimage_linking(&s, &[la], &[lb], &opts).unwrap();
    assert_eq!(total.rounded, 4);
    assert!(total.deviation < 0.05);
    assert_eq!(fibers::hopf_index(&s, &opts).unwrap().rounded, 4);
}

/// `w ↦ w²` doubles every preimage: `{χ² = c}` is `{χ = √c} ∪ {χ = −√c}`.
#[test]
fn squared_simplest_map_links_four_times() {
    let s = spec(1, 1);
    let opts = TraceOptions::default();
    let [la, lb] = IndexSetup::default().levels(&s).unwrap();
    let r = preimage_linking(&s, &[la, -la], &[lb, -lb], &opts).unwrap();
    assert_eq!(r.rounded, 4);
}
