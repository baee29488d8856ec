//! Cross-module invariants checked on random inputs.

use finsler_core::audit::PointSampler;
use finsler_core::classify::{homogeneity_audit, identity_residuals};
use finsler_core::geodesic::integrate_geodesic;
use finsler_core::hamilton::{legendre_inverse, legendre_point};
use finsler_core::metric::{Metric, MetricSpec};
use finsler_core::noether::charge_drift;
use finsler_core::tensor::{spray_coefficients, TensorState};
use proptest::prelude::*;

fn zoo_metric() -> impl Strategy<Value = MetricSpec> {
    prop::sample::select(MetricSpec::zoo_names().to_vec()).prop_map(|name| MetricSpec::builtin(name).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn length_is_positively_homogeneous(spec in zoo_metric(), seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let (x, y) = PointSampler::new(seed).point(&spec).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| lambda * v).collect();
        let a = spec.length(&x, &scaled).unwrap();
        let b = lambda * spec.length(&x, &y).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn spray_is_two_homogeneous(spec in zoo_metric(), seed in any::<u64>(), lambda in 0.25f64..4.0) {
        let (x, y) = PointSampler::new(seed).point(&spec).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| lambda * v).collect();
        let a = spray_coefficients(&spec, &x, &scaled).unwrap();
        let b = spray_coefficients(&spec, &x, &y).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - lambda * lambda * v).abs() <= 1e-9 * (lambda * lambda * v.abs()).max(1.0));
        }
    }

    #[test]
    fn identities_hold_at_random_points(spec in zoo_metric(), seed in any::<u64>()) {
        let (x, y) = PointSampler::new(seed).point(&spec).unwrap();
        for (name, residual, tol) in identity_residuals(&spec, &x, &y).unwrap() {
            prop_assert!(residual <= tol, "{name}: {residual:e}");
        }
    }

    #[test]
    fn legendre_map_round_trips(spec in zoo_metric(), seed in any::<u64>()) {
        let (x, y) = PointSampler::new(seed).point(&spec).unwrap();
        let p = legendre_point(&spec, &x, &y).unwrap();
        let back = legendre_inverse(&spec, &x, &p).unwrap();
        for (u, v) in back.iter().zip(&y) {
            prop_assert!((u - v).abs() <= 1e-8 * v.abs().max(1.0));
        }
    }

    #[test]
    fn curvature_is_antisymmetric(spec in zoo_metric(), seed in any::<u64>()) {
        let (x, y) = PointSampler::new(seed).point(&spec).unwrap();
        let state = TensorState::compute(&spec, &x, &y).unwrap();
        let n = spec.dim();
        for m in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert_eq!(state.curvature2[m][j][k], -state.curvature2[m][k][j]);
                }
            }
        }
    }

    #[test]
    fn audits_are_reproducible(seed in any::<u64>()) {
        let spec = MetricSpec::builtin("cubic_l2").unwrap();
        let a = homogeneity_audit(&spec, 3, seed, 1).unwrap();
        let b = homogeneity_audit(&spec, 3, seed, 2).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn drift_is_nonnegative_and_shift_sensitive(values in prop::collection::vec(-1e3f64..1e3, 1..20)) {
        let drift = charge_drift(&values);
        prop_assert!(drift >= 0.0);
        let constant = vec![values[0]; values.len()];
        prop_assert_eq!(charge_drift(&constant), 0.0);
    }
}

#[test]
fn geodesic_is_reversible() {
    let spec = MetricSpec::builtin("riemannian_sphere").unwrap();
    let forward = integrate_geodesic(&spec, &[0.1, 0.3], &[0.5, 0.7], 2.0, 1e-3).unwrap();
    let (x, y) = forward.endpoint();
    let back_direction: Vec<f64> = y.iter().map(|v| -v).collect();
    let back = integrate_geodesic(&spec, x, &back_direction, 2.0, 1e-3).unwrap();
    let (x0, _) = back.endpoint();
    assert!((x0[0] - 0.1).abs() <= 1e-10 && (x0[1] - 0.3).abs() <= 1e-10, "{x0:?}");
}
