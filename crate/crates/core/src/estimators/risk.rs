//! Estimators for the landmark risk of the terminal event.

use crate::data::{Dataset, SubjectRecord};
use crate::error::{Error, Result};
use crate::nuisance::{fit_km_event, CoxFit, KmFit};

use super::SurvBundle;

pub(crate) const CENSORING_FLOOR: f64 = 1e-6;

/// Conditional survival of the terminal event given arm and covariates.
pub trait EventModel {
    fn survival(&self, a: u8, t: f64, x1: f64, x2: u8) -> f64;

    /// `S(t | a, x) / S(u | a, x)` for `u ≤ t`.
    fn conditional_survival(&self, a: u8, u: f64, t: f64, x1: f64, x2: u8) -> f64 {
        let su = self.survival(a, u, x1, x2);
        if su > 0.0 {
            self.survival(a, t, x1, x2) / su
        } else {
            0.0
        }
    }
}

impl EventModel for CoxFit {
    fn survival(&self, a: u8, t: f64, x1: f64, x2: u8) -> f64 {
        CoxFit::survival(self, a, t, x1, x2)
    }

    fn conditional_survival(&self, a: u8, u: f64, t: f64, x1: f64, x2: u8) -> f64 {
        CoxFit::conditional_survival(self, a, u, t, x1, x2)
    }
}

/// Covariate-free model: the arm-wise Kaplan–Meier curves.
impl EventModel for [KmFit; 2] {
    fn survival(&self, a: u8, t: f64, _x1: f64, _x2: u8) -> f64 {
        self[a as usize].survival_at(t)
    }
}

/// Full-data influence function `I(A=a)/π̂ₐ·(I(T*≤τ) − F(τ|a,X)) + F(τ|a,X) − θ`,
/// reading `T*` from the record as if it were uncensored.
pub fn fulldata_eif_theta_t<M: EventModel>(rec: &SubjectRecord, a: u8, sb: &SurvBundle<M>, theta: f64) -> f64 {
    let f = sb.risk(a, rec.x1, rec.x2);
    let event = f64::from(u8::from(rec.is_event() && rec.time <= sb.tau));
    let own = if rec.a == a { 1.0 / sb.pi[a as usize] } else { 0.0 };
    own * (event - f) + f - theta
}

fn check_positivity<M: EventModel>(d: &Dataset, sb: &SurvBundle<M>) -> Result<()> {
    let tau = sb.tau;
    for (arm, g) in sb.censoring.iter().enumerate() {
        let arm = arm as u8;
        if !d.records().iter().any(|r| r.a == arm && r.time >= tau) {
            return Err(Error::CensoringPositivityViolation { arm, time: tau, value: g.survival_at(tau) });
        }
        if let Some(&(s, _)) = g
            .na_increments
            .iter()
            .take_while(|&&(s, _)| s <= tau)
            .find(|&&(s, _)| g.survival_at(s) < CENSORING_FLOOR)
        {
            return Err(Error::CensoringPositivityViolation { arm, time: s, value: g.survival_at(s) });
        }
    }
    Ok(())
}

/// Observed-data efficient influence function of `θ_T^(a)` at `theta`:
/// the IPCW-weighted full-data term plus the censoring-martingale
/// augmentation.
///
/// The integrand `h(u) = E[φ* | T* ≥ u, A, X] / G_c(u | A)` uses the
/// post-jump censoring survival, which makes the augmentation exactly
/// cancel the IPCW weight for any `h` that is constant in `u`.
pub fn eif_theta_t<M: EventModel>(d: &Dataset, a: u8, sb: &SurvBundle<M>, theta: f64) -> Result<Vec<f64>> {
    check_positivity(d, sb)?;
    let tau = sb.tau;
    let pi_a = sb.pi[a as usize];
    let mut out = Vec::with_capacity(d.len());
    for rec in d.records() {
        let g = &sb.censoring[rec.a as usize];
        let f_tau = sb.risk(a, rec.x1, rec.x2);
        let own = rec.a == a;
        let h = |u: f64| {
            let cond = if own {
                let tail = 1.0 - sb.event.conditional_survival(a, u, tau, rec.x1, rec.x2);
                (tail - f_tau) / pi_a + f_tau - theta
            } else {
                f_tau - theta
            };
            cond / g.survival_at(u)
        };

        let mut phi = 0.0;
        if rec.time > tau {
            phi += fulldata_eif_theta_t(rec, a, sb, theta) / g.survival_at(tau);
        } else if rec.is_event() {
            phi += fulldata_eif_theta_t(rec, a, sb, theta) / g.survival_left(rec.time);
        } else {
            phi += h(rec.time);
        }
        let horizon = rec.time.min(tau);
        for &(s, dl) in &g.na_increments {
            if s > horizon || (s == rec.time && rec.is_event()) {
                break;
            }
            phi -= h(s) * dl;
        }
        out.push(phi);
    }
    Ok(out)
}

/// One-step estimate from the Kaplan–Meier initial value and the influence
/// function re-evaluated at the updated estimate.
pub fn onestep_theta_t<M: EventModel>(d: &Dataset, a: u8, sb: &SurvBundle<M>) -> Result<(f64, Vec<f64>)> {
    let km = fit_km_event(d, a)?;
    let initial = 1.0 - km.survival_at(sb.tau);
    let n = d.len() as f64;
    let phi0 = eif_theta_t(d, a, sb, initial)?;
    let estimate = initial + phi0.iter().sum::<f64>() / n;
    let inf = eif_theta_t(d, a, sb, estimate)?;
    Ok((estimate, inf))
}

/// Kaplan–Meier risk at `tau` with its influence values, scaled so that
/// `Var ≈ mean(IF²)/n` over the whole sample.
pub fn naive_theta_t(d: &Dataset, a: u8, tau: f64) -> Result<(f64, f64, Vec<f64>)> {
    let km = fit_km_event(d, a)?;
    let surv = km.survival_at(tau);
    let n = d.len() as f64;
    // risk-set proportion ŷ(s) = Y(s)/n among all subjects
    let mut arm_times: Vec<f64> = d.records().iter().filter(|r| r.a == a).map(|r| r.time).collect();
    arm_times.sort_by(f64::total_cmp);
    let y_frac = |s: f64| (arm_times.len() - arm_times.partition_point(|&t| t < s)) as f64 / n;
    let steps: Vec<(f64, f64, f64)> =
        km.na_increments.iter().filter(|p| p.0 <= tau).map(|&(s, dl)| (s, dl, y_frac(s))).collect();
    let inf = d
        .records()
        .iter()
        .map(|r| {
            if r.a != a {
                return 0.0;
            }
            let mut m = 0.0;
            if r.is_event() && r.time <= tau {
                m += 1.0 / y_frac(r.time);
            }
            for &(s, dl, y) in &steps {
                if s > r.time {
                    break;
                }
                m -= dl / y;
            }
            surv * m
        })
        .collect();
    Ok((1.0 - surv, km.greenwood_variance(tau), inf))
}
