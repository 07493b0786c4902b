//! Property-based checks of the invariants of each module.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use hopf_eikonal::calculus::{
    fd_gradient, residual_scan, split_residuals, SamplingSpec, ScalarField, SharedField,
};
use hopf_eikonal::coords::{self, wrap_to_pi, CartesianPoint, Vec3};
use hopf_eikonal::fibers::{gauss_linking, Fiber};
use hopf_eikonal::hopf::{self, HopfMapSpec};
use hopf_eikonal::symmetry::{transform_base, BaseConformalMap, ConformalPrimitive};
use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;

fn winding() -> impl Strategy<Value = i32> {
    prop_oneof![-3..=-1, 1..=3]
}

fn spec_strategy() -> impl Strategy<Value = HopfMapSpec> {
    (winding(), winding()).prop_map(|(m, n)| HopfMapSpec::new(m, n).unwrap())
}

/// Points in [−2, 2]³ at least `margin` away from the focal circle and the z-axis.
fn regular_point(margin: f64) -> impl Strategy<Value = CartesianPoint> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(x, y, z)| CartesianPoint::new(x, y, z))
        .prop_filter("too close to a singular locus", move |p| {
            p.distance_to_focal_circle() > margin && p.cylindrical_radius() > margin
        })
}

fn unit_vector() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
        .prop_filter("degenerate axis", |v| v.norm() > 0.1)
        .prop_map(|v| v.normalize())
}

fn primitive() -> impl Strategy<Value = ConformalPrimitive> {
    prop_oneof![
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_map(|(x, y, z)| ConformalPrimitive::translation(Vec3::new(x, y, z))),
        (unit_vector(), -PI..PI).prop_map(|(a, t)| ConformalPrimitive::rotation(a, t).unwrap()),
        (0.5..2.0f64).prop_map(|s| ConformalPrimitive::dilation(s).unwrap()),
        Just(ConformalPrimitive::Inversion),
    ]
}

fn grad_norm(g: &hopf::ComplexVec3) -> f64 {
    g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn cartesian_round_trip(p in regular_point(1e-3)) {
        let back = coords::to_cartesian(&coords::to_toroidal(&p).unwrap()).unwrap();
        prop_assert!(p.distance(&back) < 1e-10 * p.to_vector().norm().max(1.0), "{p:?} -> {back:?}");
    }

    #[test]
    fn simplest_map_equals_rational_form(p in regular_point(1e-3)) {
        let spec = HopfMapSpec::new(1, 1).unwrap();
        let a = hopf::evaluate(&spec, &p).unwrap();
        let b = hopf::rational_chi11(&p);
        prop_assert!((a - b).norm() < 1e-10 * b.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn frame_is_orthonormal_and_right_handed(p in regular_point(1e-3)) {
        let t = coords::to_toroidal(&p).unwrap();
        prop_assert!(t.q() > 0.0);
        let f = coords::toroidal_frame(&t).unwrap();
        prop_assert!(f.orthonormality_defect() < 1e-12);
        prop_assert!((f.e_eta.cross(&f.e_xi) - f.e_phi).norm() < 1e-12);
    }

    #[test]
    fn coordinate_gradients_match_frame(p in regular_point(0.05)) {
        let h = 1e-6;
        let t = coords::to_toroidal(&p).unwrap();
        let f = coords::toroidal_frame(&t).unwrap();
        let q = t.q();
        let expected = [f.e_eta * q, f.e_xi * q, f.e_phi * (q / t.eta.sinh())];
        let mut fd = [Vec3::zeros(); 3];
        for k in 0..3 {
            let mut dv = Vec3::zeros();
            dv[k] = h;
            let a = coords::to_toroidal(&p.offset(&dv)).unwrap();
            let b = coords::to_toroidal(&p.offset(&-dv)).unwrap();
            fd[0][k] = (a.eta - b.eta) / (2.0 * h);
            fd[1][k] = wrap_to_pi(a.xi - b.xi) / (2.0 * h);
            fd[2][k] = wrap_to_pi(a.phi - b.phi) / (2.0 * h);
        }
        for (g, e) in fd.iter().zip(&expected) {
            prop_assert!((g - e).norm() < 1e-6 * e.norm(), "{g:?} vs {e:?}");
        }
    }

    #[test]
    fn profile_ignores_winding_signs(m in 1..=3i32, n in 1..=3i32, eta in 1e-3..30.0f64) {
        let f = |m, n| hopf::profile_f(&HopfMapSpec::new(m, n).unwrap(), eta).unwrap();
        let base = f(m, n);
        prop_assert_eq!(base, f(-m, n));
        prop_assert_eq!(base, f(m, -n));
        prop_assert_eq!(base, f(-m, -n));
    }

    #[test]
    fn profile_is_increasing(spec in spec_strategy(), eta in 1e-3..19.0f64) {
        let a = hopf::profile_f(&spec, eta).unwrap();
        let b = hopf::profile_f(&spec, eta * 1.01 + 1e-3).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn log_derivative_solves_the_ode(spec in spec_strategy(), eta in 0.1..10.0f64) {
        let lhs = hopf::profile_log_deriv(&spec, eta).unwrap();
        let rhs = hopf::ode_rhs(&spec, eta).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn profile_inverse_round_trips(spec in spec_strategy(), eta in 1e-2..15.0f64) {
        let f = hopf::profile_f(&spec, eta).unwrap();
        let back = hopf::profile_inverse(&spec, f).unwrap();
        prop_assert!((back - eta).abs() < 1e-9 * eta.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn fd_gradient_agrees_with_analytic(spec in spec_strategy(), p in regular_point(0.05)) {
        let t = coords::to_toroidal(&p).unwrap();
        let analytic = hopf::gradient_analytic(&spec, &t).unwrap();
        let fd = fd_gradient(&spec, &p, 1e-5).unwrap();
        prop_assert!((fd - analytic).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() < 1e-6 * grad_norm(&analytic));
    }

    #[test]
    fn split_conditions_hold(spec in spec_strategy(), p in regular_point(0.05)) {
        let r = split_residuals(&spec, &p, 1e-5).unwrap();
        prop_assert!(r.orthogonality < 1e-6 && r.balance < 1e-6, "{r:?}");
    }

    /// Central differences are second order: halving h quarters the error.
    #[test]
    fn stencil_converges_quadratically(spec in spec_strategy(), eta in 0.3..2.0f64, xi in 0.3..(TAU - 0.3), phi in 0.0..TAU) {
        let t = coords::ToroidalPoint::new(eta, xi, phi).unwrap();
        let p = coords::to_cartesian(&t).unwrap();
        let analytic = hopf::gradient_analytic(&spec, &t).unwrap();
        let err = |h: f64| {
            let fd = fd_gradient(&spec, &p, h).unwrap();
            (fd - analytic).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
        };
        let ratio = err(1e-4) / err(5e-5);
        prop_assert!((2.0..=8.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn conformal_composition_law(
        t1 in prop::collection::vec(primitive(), 1..4),
        t2 in prop::collection::vec(primitive(), 1..4),
        p in regular_point(0.05),
    ) {
        let base: SharedField = Arc::new(HopfMapSpec::new(2, 3).unwrap());
        let (t1, t2) = (BaseConformalMap::new(t1), BaseConformalMap::new(t2));
        let nested = transform_base(transform_base(base.clone(), t1.clone()), t2.clone());
        let composed = transform_base(base, t1.then(&t2));
        match (nested.evaluate(&p), composed.evaluate(&p)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "{a} vs {b}"),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }
}

fn circle(center: Vec3, u: Vec3, v: Vec3, n: usize) -> Fiber {
    let points = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            CartesianPoint::from_vector(&(center + u * t.cos() + v * t.sin()))
        })
        .collect();
    Fiber::from_points(points, true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linking_is_symmetric_and_rigid_invariant(
        axis in unit_vector(),
        angle in -PI..PI,
        shift in (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        offset in 0.4..0.6f64,
    ) {
        let a = circle(Vec3::zeros(), Vec3::x(), Vec3::y(), 400);
        let b = circle(Vec3::new(offset, 0.0, 0.0), -Vec3::x(), Vec3::z(), 400);
        let ab = gauss_linking(&a, &b).unwrap();
        let ba = gauss_linking(&b, &a).unwrap();
        prop_assert!((ab.raw - ba.raw).abs() < 1e-9);
        prop_assert_eq!(ab.rounded, 1);

        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let d = Vec3::new(shift.0, shift.1, shift.2);
        let moved = gauss_linking(&a.transformed(&rot, &d), &b.transformed(&rot, &d)).unwrap();
        prop_assert!((moved.raw - ab.raw).abs() < 1e-9, "{} vs {}", moved.raw, ab.raw);
    }
}

#[test]
fn scans_are_bit_reproducible() {
    let spec = HopfMapSpec::new(2, 3).unwrap();
    let sampling = SamplingSpec::default().with_samples(300).with_seed(17);
    let a = residual_scan(&spec, &sampling, 1e-5).unwrap();
    let b = residual_scan(&spec, &sampling, 1e-5).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.samples + a.excluded, 300);
}
