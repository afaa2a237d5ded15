use truncscore::data::{Dataset, LandmarkSpec, SubjectRecord};
use truncscore::estimators::*;
use truncscore::nuisance::{fit_km_censoring, fit_km_event, Design, KmFit};
use truncscore::numerics::RandomSource;
use truncscore::simulation::{simulate_dataset, truth_oracle, ScenarioParams};

fn sim(n: usize, seed: u64) -> Dataset {
    simulate_dataset(&ScenarioParams::table1(), n, &mut RandomSource::new(seed)).unwrap()
}

fn uncensored(n: usize, seed: u64) -> Dataset {
    let mut sp = ScenarioParams::table1();
    sp.eps0.beta = [[-700.0, 0.0, 0.0]; 2];
    let d = simulate_dataset(&sp, n, &mut RandomSource::new(seed)).unwrap();
    assert!(d.records().iter().all(|r| r.status > 0));
    d
}

fn rec(a: u8, y: Option<f64>, time: f64, status: u32) -> SubjectRecord {
    SubjectRecord { a, x1: 50.0, x2: 0, time, status, r: u8::from(y.is_some()), y }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn lm() -> LandmarkSpec {
    LandmarkSpec::new(2.0).unwrap()
}

#[test]
fn naive_score_plain_mean() {
    let d = Dataset::new(vec![
        rec(1, Some(1.0), 3.0, 0),
        rec(1, Some(2.0), 3.0, 0),
        rec(1, Some(3.0), 3.0, 0),
        rec(0, Some(5.0), 3.0, 0),
        rec(0, None, 1.0, 1),
    ])
    .unwrap();
    let (t1, _) = naive_theta_y(&d, &lm(), 1).unwrap();
    assert_eq!(t1, 2.0);
    let (t0, inf) = naive_theta_y(&d, &lm(), 0).unwrap();
    assert_eq!(t0, 5.0);
    assert_eq!(inf[3], 0.0);
}

#[test]
fn naive_score_needs_observed_scores() {
    let d = Dataset::new(vec![rec(1, Some(1.0), 3.0, 0), rec(0, None, 1.0, 1)]).unwrap();
    assert!(matches!(naive_theta_y(&d, &lm(), 0), Err(truncscore::Error::PositivityViolation { arm: 0 })));
}

#[test]
fn constant_predictions_reduce_to_naive() {
    let d = sim(2000, 1);
    let n = d.len();
    let base = NuisanceBundle::from_predictions(&d, &lm(), [vec![0.0; n], vec![0.0; n]], [vec![1.0; n], vec![1.0; n]])
        .unwrap();
    let q = base.theta_y_naive.map(|t| vec![t; n]);
    let nb = NuisanceBundle::from_predictions(&d, &lm(), q, [vec![1.0; n], vec![1.0; n]]).unwrap();
    for a in 0..2u8 {
        let (naive, naive_if) = naive_theta_y(&d, &lm(), a).unwrap();
        let phi = eif_theta_y(&d, a, &nb).unwrap();
        assert!(phi.iter().zip(&naive_if).all(|(p, q)| (p - q).abs() < 1e-12));
        assert!((onestep_theta_y(&d, a, &nb).unwrap().0 - naive).abs() < 1e-12);
    }
}

#[test]
fn first_term_by_substitution() {
    let d = sim(1000, 2);
    let nb = NuisanceBundle::fit(&d, &lm(), Design::centered(&d)).unwrap();
    let phi = eif_theta_y(&d, 1, &nb).unwrap();
    let (i, r) = d.records().iter().enumerate().find(|(_, r)| r.a == 1 && r.observed_at(2.0)).unwrap();
    let second = (1.0 - nb.pi[1]) * (1.0 - nb.pi[1]) / (nb.rho[1] * nb.pi[1] * (1.0 - nb.pi[1]))
        * (nb.q[1][i] - nb.theta_y_naive[1])
        * nb.pr[1][i];
    let first = (r.y.unwrap() - nb.theta_y_naive[1]) / (nb.pi[1] * nb.rho[1]);
    assert!((phi[i] - (first - second)).abs() < 1e-12);
}

#[test]
fn onestep_identity() {
    for seed in 0..5 {
        let d = sim(1500, 10 + seed);
        let nb = NuisanceBundle::fit(&d, &lm(), Design::centered(&d)).unwrap();
        for a in 0..2u8 {
            let (est, _) = onestep_theta_y(&d, a, &nb).unwrap();
            let id = onestep_identity_theta_y(&d, a, &nb).unwrap();
            assert!((est - id).abs() < 1e-10, "{est} {id}");
        }
    }
}

#[test]
fn adjusted_influence_columns_have_mean_zero() {
    for seed in 0..3 {
        let d = sim(3000, 20 + seed);
        let fit = estimate_truncatedscore(&d, &lm()).unwrap();
        let r = &fit.adjusted;
        for k in 0..2 {
            let m = mean(&r.if_contribs.iter().map(|v| v[k]).collect::<Vec<_>>());
            assert!(m.abs() <= 1e-8, "column {k}: {m}");
        }
    }
}

#[test]
fn fulldata_substitution() {
    struct Flat(f64);
    impl EventModel for Flat {
        fn survival(&self, _: u8, _: f64, _: f64, _: u8) -> f64 {
            self.0
        }
    }
    let d = sim(200, 3);
    let censoring = [fit_km_censoring(&d, 0).unwrap(), fit_km_censoring(&d, 1).unwrap()];
    let sb = SurvBundle { event: Flat(0.7), censoring, pi: [0.5, 0.5], tau: 2.0 };
    let r = rec(1, None, 1.0, 1);
    assert!((fulldata_eif_theta_t(&r, 1, &sb, 0.3) - 1.4).abs() < 1e-12);
    assert!(fulldata_eif_theta_t(&rec(0, None, 1.0, 1), 1, &sb, 0.3).abs() < 1e-12);
}

#[test]
fn no_censoring_collapse() {
    let d = uncensored(3000, 4);
    let tau = 2.0;
    let km: [KmFit; 2] = [fit_km_event(&d, 0).unwrap(), fit_km_event(&d, 1).unwrap()];
    let saturated = SurvBundle::with_model(&d, &lm(), km).unwrap();
    for a in 0..2u8 {
        let (est, _) = onestep_theta_t(&d, a, &saturated).unwrap();
        let arm: Vec<_> = d.records().iter().filter(|r| r.a == a).collect();
        let prop = arm.iter().filter(|r| r.time <= tau).count() as f64 / arm.len() as f64;
        assert!((est - prop).abs() < 1e-12, "{est} {prop}");
    }

    // with any event model the augmentation vanishes and the full-data form remains
    let cox = SurvBundle::fit(&d, &lm(), Design::centered(&d)).unwrap();
    for a in 0..2u8 {
        let phi = eif_theta_t(&d, a, &cox, 0.1).unwrap();
        for (p, r) in phi.iter().zip(d.records()) {
            assert!((p - fulldata_eif_theta_t(r, a, &cox, 0.1)).abs() < 1e-12);
        }
    }
}

#[test]
fn arm_relabel_antisymmetry() {
    let d = sim(2000, 5);
    let f = estimate_truncatedscore(&d, &lm()).unwrap();
    let g = estimate_truncatedscore(&d.relabel_arms(), &lm()).unwrap();
    for (x, y) in [(&f.adjusted, &g.adjusted), (&f.naive, &g.naive)] {
        assert!((x.psi_y + y.psi_y).abs() < 1e-9, "{} {}", x.psi_y, y.psi_y);
        assert!((x.psi_t + y.psi_t).abs() < 1e-9);
        assert!((x.theta_y[0] - y.theta_y[1]).abs() < 1e-9);
        assert!((x.theta_t[1] - y.theta_t[0]).abs() < 1e-9);
        assert!((x.se_psi_y - y.se_psi_y).abs() < 1e-9);
        assert!((x.se_psi_t - y.se_psi_t).abs() < 1e-9);
    }
}

#[test]
fn covariance_and_intervals() {
    for seed in 0..4 {
        let d = sim(1000, 30 + seed);
        let f = estimate_truncatedscore(&d, &lm()).unwrap();
        for r in [&f.adjusted, &f.naive] {
            let s = r.sigma;
            assert_eq!(s[0][1], s[1][0]);
            assert!(s[0][0] > 0.0 && s[1][1] > 0.0);
            assert!(s[0][0] * s[1][1] - s[0][1] * s[1][0] >= 0.0);
            assert!((r.ci_psi_y[0] - (r.psi_y - Z_975 * r.se_psi_y)).abs() < 1e-12);
            assert!((r.ci_psi_t[1] - (r.psi_t + Z_975 * r.se_psi_t)).abs() < 1e-12);
            assert!(r.theta_t.iter().all(|t| (0.0..=1.0).contains(t)));
        }
    }
}

#[test]
fn km_risk_weakly_increases_with_landmark() {
    let d = sim(2000, 6);
    for a in 0..2u8 {
        let mut prev = 0.0;
        for k in 1..=30 {
            let (risk, _, _) = naive_theta_t(&d, a, 0.1 * k as f64).unwrap();
            assert!(risk >= prev);
            prev = risk;
        }
    }
}

#[test]
fn empty_arm_is_a_hard_error() {
    let recs: Vec<_> = sim(300, 7).records().iter().filter(|r| r.a == 1).cloned().collect();
    let d = Dataset::new(recs).unwrap();
    assert!(matches!(estimate_truncatedscore(&d, &lm()), Err(truncscore::Error::EmptyArm(0))));
}

#[test]
fn landmark_beyond_follow_up_is_a_positivity_error() {
    let d = sim(300, 8);
    let far = LandmarkSpec::new(1e3).unwrap();
    assert!(matches!(
        estimate_truncatedscore(&d, &far),
        Err(truncscore::Error::CensoringPositivityViolation { .. }) | Err(truncscore::Error::PositivityViolation { .. })
    ));
}

/// Influence functions evaluated at the population values average to zero
/// within Monte Carlo error in a large sample.
#[test]
fn influence_functions_centred_at_truth() {
    let sp = ScenarioParams::table1();
    let truth = truth_oracle(&sp, 1_000_000, &RandomSource::new(77)).unwrap();
    let d = sim(100_000, 9);
    let design = Design::centered(&d);
    let sb = SurvBundle::fit(&d, &lm(), design).unwrap();
    for a in 0..2u8 {
        let phi = eif_theta_t(&d, a, &sb, truth.theta_t[a as usize]).unwrap();
        let m = mean(&phi);
        let se = (phi.iter().map(|p| (p - m).powi(2)).sum::<f64>() / phi.len() as f64).sqrt()
            / (phi.len() as f64).sqrt();
        assert!(m.abs() < 3.0 * se + 3e-4, "arm {a}: mean {m}, se {se}");
    }
    let nb = NuisanceBundle::fit(&d, &lm(), design).unwrap();
    for a in 0..2u8 {
        let (est, xi) = onestep_theta_y(&d, a, &nb).unwrap();
        let se = (mean(&xi.iter().map(|v| v * v).collect::<Vec<_>>()) / xi.len() as f64).sqrt();
        assert!((est - truth.theta_y[a as usize]).abs() < 3.0 * se + 0.02, "arm {a}: {est}");
    }
}
