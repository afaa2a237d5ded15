use proptest::prelude::*;
use truncscore::estimators::{EstimationResult, Method};
use truncscore::numerics::{norm_sf, Matrix, RandomSource};
use truncscore::testing::*;

fn cov(s1: f64, s2: f64, rho: f64) -> Matrix {
    Matrix::from_rows(&[[s1 * s1, rho * s1 * s2], [rho * s1 * s2, s2 * s2]])
}

fn result(psi: [f64; 2], se: [f64; 2], rho: f64, n: usize) -> EstimationResult {
    let nf = n as f64;
    let s = [
        [se[0] * se[0] * nf, rho * se[0] * se[1] * nf],
        [rho * se[0] * se[1] * nf, se[1] * se[1] * nf],
    ];
    EstimationResult {
        method: Method::Adjusted,
        tau: 2.0,
        n,
        theta_y: [0.0, psi[0]],
        theta_t: [psi[1], 0.0],
        se_theta_y: [se[0]; 2],
        se_theta_t: [se[1]; 2],
        psi_y: psi[0],
        psi_t: psi[1],
        se_psi_y: se[0],
        se_psi_t: se[1],
        ci_psi_y: [0.0; 2],
        ci_psi_t: [0.0; 2],
        sigma: s,
        if_contribs: Vec::new(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn single_test_examples() {
    let r = signed_wald_single(0.0, 1.0, 0.0, Side::Y).unwrap();
    assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    let r = signed_wald_single(1.959964, 1.0, 0.0, Side::Y).unwrap();
    assert!((r.statistic - 3.8415).abs() < 1e-4);
    assert!((r.p_value - 0.025).abs() < 1e-7);
    assert!((r.p_value - norm_sf(r.z)).abs() < 1e-15);
    // the risk margin enters with the opposite sign
    let r = signed_wald_single(-0.05, 0.01, 0.05, Side::T).unwrap();
    assert_eq!(r.z, 0.0);
    assert!((single_p_value(8.697) - 0.0016).abs() < 5e-5);
    assert!(signed_wald_single(1.0, 0.0, 0.0, Side::Y).is_err());
}

#[test]
fn intersection_examples() {
    assert!((intersection_statistic(2.0, 2.0, 0.0) - 8.0).abs() < 1e-12);
    assert!((intersection_statistic(3.0, -1.0, 0.0) - 9.0).abs() < 1e-12);
    assert_eq!(intersection_statistic(-0.5, -1.0, 0.3), 0.0);
    let v = cov(1.0, 1.0, 0.0);
    assert!((sw_grid([3.0, -1.0], &v, [0.0, 0.0]).unwrap() - 9.0).abs() < 1e-8);
    let r = signed_wald_intersection([-1.0, -2.0], &v, [0.0, 0.0]).unwrap();
    assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    assert!(matches!(
        signed_wald_intersection([1.0, 1.0], &cov(1.0, 1.0, 1.0 - 1e-12), [0.0, 0.0]),
        Err(truncscore::Error::DegenerateCovariance { .. })
    ));
}

#[test]
fn oracle_equivalence_on_random_instances() {
    let mut rs = RandomSource::new(2024);
    for i in 0..1000 {
        let psi = [2.0 * rs.normal(), 2.0 * rs.normal()];
        let (s1, s2) = (0.05 + 2.0 * rs.uniform(), 0.05 + 2.0 * rs.uniform());
        let rho = 1.9 * rs.uniform() - 0.95;
        let margins = [0.3 * rs.uniform(), 0.3 * rs.uniform()];
        let v = cov(s1, s2, rho);
        let region = signed_wald_intersection(psi, &v, margins).unwrap().statistic;
        let dyk = sw_dykstra(psi, &v, margins).unwrap();
        let grid = sw_grid(psi, &v, margins).unwrap();
        assert!(close(region, dyk), "instance {i}: region {region} dykstra {dyk}");
        assert!(close(region, grid), "instance {i}: region {region} grid {grid}");
    }
}

#[test]
fn dykstra_examples() {
    assert_eq!(dykstra_project(&[-1.0, -2.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), vec![-1.0, -2.0]);
    let p = dykstra_project(&[3.0, 4.0], &[vec![1.0, 0.0]]).unwrap();
    assert_eq!(p, vec![0.0, 4.0]);
    let p = dykstra_project(&[1.0, 1.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12);
}

#[test]
fn holm_thresholds() {
    assert_eq!(holm(0.01, 0.02, 0.025), Decisions { reject_y: true, reject_t: true });
    assert_eq!(holm(0.013, 0.02, 0.025), Decisions { reject_y: false, reject_t: false });
    assert_eq!(holm(0.3, 0.001, 0.025), Decisions { reject_y: false, reject_t: true });
}

#[test]
fn closed_test_examples() {
    let cfg = TestConfig::default();
    let rep = closed_test(&result([5.0, 5.0], [1.0, 1.0], 0.2, 1000), &cfg).unwrap();
    assert!(rep.reject_y && rep.reject_t && rep.holm.reject_y && rep.holm.reject_t);
    let rep = closed_test(&result([10.0, -1.0], [1.0, 1.0], 0.2, 1000), &cfg).unwrap();
    assert!(rep.reject_y && !rep.reject_t);
    assert!(rep.closure_holds());
    let bad = TestConfig { alpha: 0.7, ..cfg };
    assert!(closed_test(&result([1.0, 1.0], [1.0, 1.0], 0.0, 10), &bad).is_err());
}

proptest! {
    #[test]
    fn dominance_and_weights(z1 in -5f64..5.0, z2 in -5f64..5.0, rho in -0.99f64..0.99) {
        let sw = intersection_statistic(z1, z2, rho);
        let zmax = z1.max(z2);
        let bound = if zmax >= 0.0 { zmax * zmax } else { 0.0 };
        prop_assert!(sw >= bound - 1e-12);
        let q = q_hat(rho).unwrap();
        prop_assert!((0.0..0.5).contains(&q));
        let r = IntersectionResult { z: [z1, z2], statistic: sw, q_hat: q, rho_hat: rho, p_value: 0.0 };
        let w = r.mixture_weights();
        prop_assert_eq!(w[0] + w[1] + w[2], 1.0);
    }

    #[test]
    fn p_value_monotone(a in 0f64..40.0, b in 0f64..40.0, rho in -0.99f64..0.99) {
        let q = q_hat(rho).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(mixture_p_value(hi, q) <= mixture_p_value(lo, q));
        prop_assert!(mixture_p_value(lo, q) <= 1.0 && mixture_p_value(hi, q) > 0.0);
    }

    #[test]
    fn scale_invariance(
        p1 in -3f64..3.0, p2 in -3f64..3.0, s1 in 0.1f64..2.0, s2 in 0.1f64..2.0,
        rho in -0.9f64..0.9, d1 in 0f64..0.5, d2 in 0f64..0.5, c in 0.01f64..100.0,
    ) {
        let a = signed_wald_intersection([p1, p2], &cov(s1, s2, rho), [d1, d2]).unwrap();
        let b = signed_wald_intersection([c * p1, c * p2], &cov(c * s1, c * s2, rho), [c * d1, c * d2]).unwrap();
        for k in 0..2 {
            prop_assert!((a.z[k] - b.z[k]).abs() < 1e-12 * a.z[k].abs().max(1.0));
        }
        prop_assert!((a.statistic - b.statistic).abs() < 1e-12 * a.statistic.max(1.0));
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
    }

    #[test]
    fn closure_always_holds(
        p1 in -1f64..1.0, p2 in -0.1f64..0.1, s1 in 0.1f64..1.0, s2 in 0.005f64..0.05,
        rho in -0.9f64..0.9, alpha in 0.001f64..0.2,
    ) {
        let cfg = TestConfig::new(alpha, 0.0, 0.0).unwrap();
        let rep = closed_test(&result([p1, p2], [s1, s2], rho, 500), &cfg).unwrap();
        prop_assert!(rep.closure_holds());
        prop_assert!(!rep.reject_y || rep.reject_intersection);
        prop_assert!(!rep.reject_t || rep.reject_intersection);
    }
}
