use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::StepFunction;

/// Arm-wise Kaplan–Meier fit with Nelson–Aalen increments and cumulative
/// Greenwood sums at each jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmFit {
    pub arm: u8,
    pub survival: StepFunction,
    /// `(s, dΛ̂(s))` at each jump time.
    pub na_increments: Vec<(f64, f64)>,
    greenwood: Vec<f64>,
}

impl KmFit {
    pub fn survival_at(&self, t: f64) -> f64 {
        self.survival.value_at(t)
    }

    pub fn survival_left(&self, t: f64) -> f64 {
        self.survival.left_limit(t)
    }

    /// Greenwood variance `Ŝ(t)² Σ_{s ≤ t} d/(Y(Y − d))`.
    pub fn greenwood_variance(&self, t: f64) -> f64 {
        let k = self.survival.jump_times().partition_point(|&s| s <= t);
        if k == 0 {
            return 0.0;
        }
        let s = self.survival.values()[k - 1];
        s * s * self.greenwood[k - 1]
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Target {
    /// Terminal events (`status > 0`) are the events of interest.
    Event,
    /// Censorings (`status = 0`) are the events of interest; terminal events
    /// at a tied time leave the risk set first.
    Censoring,
}

fn fit(d: &Dataset, a: u8, target: Target) -> Result<KmFit> {
    let mut obs: Vec<(f64, bool)> = d
        .records()
        .iter()
        .filter(|r| r.a == a)
        .map(|r| (r.time, r.is_event()))
        .collect();
    if obs.is_empty() {
        return Err(Error::EmptyArm(a));
    }
    obs.sort_by(|p, q| p.0.total_cmp(&q.0));

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut na_increments = Vec::new();
    let mut greenwood = Vec::new();
    let (mut surv, mut gw) = (1.0, 0.0);
    let mut at_risk = obs.len() as f64;
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let mut j = i;
        let (mut events, mut cens) = (0.0, 0.0);
        while j < obs.len() && obs[j].0 == t {
            if obs[j].1 {
                events += 1.0;
            } else {
                cens += 1.0;
            }
            j += 1;
        }
        let (hits, risk) = match target {
            Target::Event => (events, at_risk),
            Target::Censoring => (cens, at_risk - events),
        };
        if hits > 0.0 {
            let h = hits / risk;
            surv *= 1.0 - h;
            gw += if risk > hits { hits / (risk * (risk - hits)) } else { f64::INFINITY };
            times.push(t);
            values.push(surv);
            na_increments.push((t, h));
            greenwood.push(gw);
        }
        at_risk -= events + cens;
        i = j;
    }
    Ok(KmFit { arm: a, survival: StepFunction::new(times, values, 1.0)?, na_increments, greenwood })
}

/// Kaplan–Meier estimate of the censoring survival `G_c(t | a)`.
pub fn fit_km_censoring(d: &Dataset, a: u8) -> Result<KmFit> {
    fit(d, a, Target::Censoring)
}

/// Kaplan–Meier estimate of the terminal-event-free survival in arm `a`.
pub fn fit_km_event(d: &Dataset, a: u8) -> Result<KmFit> {
    fit(d, a, Target::Event)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SubjectRecord;
    use proptest::prelude::*;

    fn data(rows: &[(u8, f64, u32)]) -> Dataset {
        let recs = rows
            .iter()
            .map(|&(a, time, status)| SubjectRecord { a, x1: 0.0, x2: 0, time, status, r: 0, y: None })
            .collect();
        Dataset::new(recs).unwrap()
    }

    #[test]
    fn no_censoring_gives_unit_censoring_survival() {
        let d = data(&[(0, 1.0, 1), (0, 2.0, 2), (0, 3.0, 1)]);
        let g = fit_km_censoring(&d, 0).unwrap();
        assert!(g.na_increments.is_empty());
        assert_eq!(g.survival_at(10.0), 1.0);
    }

    #[test]
    fn single_censoring_hand_computation() {
        let d = data(&[(0, 1.0, 0), (0, 2.0, 1), (0, 3.0, 1), (0, 4.0, 1)]);
        let g = fit_km_censoring(&d, 0).unwrap();
        assert_eq!(g.survival_at(1.0), 0.75);
        assert_eq!(g.survival_left(1.0), 1.0);
        assert_eq!(g.na_increments, vec![(1.0, 0.25)]);
    }

    #[test]
    fn terminal_events_leave_risk_set_before_tied_censoring() {
        let d = data(&[(0, 1.0, 1), (0, 1.0, 0), (0, 2.0, 0), (0, 3.0, 1)]);
        let g = fit_km_censoring(&d, 0).unwrap();
        // at t=1: 3 remain after the event, one censored
        assert!((g.na_increments[0].1 - 1.0 / 3.0).abs() < 1e-15);
        let s = fit_km_event(&d, 0).unwrap();
        // events count the tied censoring as at risk
        assert_eq!(s.survival_at(1.0), 0.75);
    }

    #[test]
    fn no_events_before_tau() {
        let d = data(&[(1, 3.0, 1), (1, 1.0, 0), (1, 2.5, 0)]);
        let s = fit_km_event(&d, 1).unwrap();
        assert_eq!(1.0 - s.survival_at(2.0), 0.0);
    }

    #[test]
    fn greenwood_hand_computation() {
        let d = data(&[(0, 1.0, 1), (0, 2.0, 0), (0, 3.0, 1), (0, 4.0, 0)]);
        let s = fit_km_event(&d, 0).unwrap();
        // S(3) = 3/4 * 1/2, sum = 1/(4*3) + 1/(2*1)
        let expected = (0.375f64).powi(2) * (1.0 / 12.0 + 0.5);
        assert!((s.greenwood_variance(3.5) - expected).abs() < 1e-15);
        assert_eq!(s.greenwood_variance(0.5), 0.0);
    }

    #[test]
    fn empty_arm() {
        let d = data(&[(0, 1.0, 1), (0, 2.0, 0)]);
        assert!(matches!(fit_km_event(&d, 1), Err(Error::EmptyArm(1))));
        assert!(matches!(fit_km_censoring(&d, 1), Err(Error::EmptyArm(1))));
    }

    proptest! {
        #[test]
        fn km_without_censoring_is_one_minus_ecdf(
            times in prop::collection::vec(1u32..40, 2..60),
            probe in 0u32..45,
        ) {
            let rows: Vec<_> = times.iter().map(|&t| (0u8, f64::from(t) / 4.0, 1u32)).collect();
            let d = data(&rows);
            let s = fit_km_event(&d, 0).unwrap();
            let t = f64::from(probe) / 4.0;
            let ecdf = rows.iter().filter(|r| r.1 <= t).count() as f64 / rows.len() as f64;
            prop_assert!((s.survival_at(t) - (1.0 - ecdf)).abs() < 1e-12);
            prop_assert!(s.survival.is_non_increasing());
        }

        #[test]
        fn censoring_survival_is_valid(
            rows in prop::collection::vec((1u32..30, 0u32..3), 2..60),
        ) {
            let rows: Vec<_> = rows.iter().map(|&(t, s)| (0u8, f64::from(t), s)).collect();
            let d = data(&rows);
            let g = fit_km_censoring(&d, 0).unwrap();
            prop_assert!(g.survival.is_non_increasing());
            prop_assert!(g.survival.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!(g.na_increments.iter().all(|&(_, h)| h >= 0.0));
        }
    }
}
