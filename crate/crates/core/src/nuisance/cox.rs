use serde::{Deserialize, Serialize};

use super::{dot, solve_equilibrated, Design};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, StepFunction};

const MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 10;
const SCORE_TOL: f64 = 1e-8;

/// Cox model for the terminal event with covariates `(x1 − c, x2)`, shared
/// coefficients and a Breslow baseline hazard per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    pub beta: Vec<f64>,
    pub beta_se: Vec<f64>,
    /// Cumulative baseline hazard `Λ₀ₐ` indexed by arm.
    pub baseline: [StepFunction; 2],
    pub design: Design,
    pub iterations: usize,
    pub score_norm: f64,
    pub converged: bool,
}

impl CoxFit {
    pub fn linear_predictor(&self, x1: f64, x2: u8) -> f64 {
        dot(&self.beta, &self.design.row(x1, x2)[1..])
    }

    pub fn cumulative_hazard(&self, a: u8, t: f64, x1: f64, x2: u8) -> f64 {
        self.baseline[a as usize].value_at(t) * self.linear_predictor(x1, x2).exp()
    }

    /// `S(t | a, x) = exp(−Λ₀ₐ(t) e^{xᵀβ})`.
    pub fn survival(&self, a: u8, t: f64, x1: f64, x2: u8) -> f64 {
        (-self.cumulative_hazard(a, t, x1, x2)).exp()
    }

    /// `S(t | a, x) / S(u | a, x)` for `u ≤ t`, computed from the hazard
    /// difference to avoid dividing two small survivals.
    pub fn conditional_survival(&self, a: u8, u: f64, t: f64, x1: f64, x2: u8) -> f64 {
        let base = &self.baseline[a as usize];
        let dl = (base.value_at(t) - base.value_at(u)).max(0.0);
        (-dl * self.linear_predictor(x1, x2).exp()).exp()
    }

    pub fn report(&self) -> String {
        let mut s = String::from("Stratified Cox model (strata: arm)\n");
        for (name, (b, se)) in ["x1", "x2"].iter().zip(self.beta.iter().zip(&self.beta_se)) {
            s.push_str(&format!("  {name:<4} coef {b:>10.5}  se {se:>9.5}\n"));
        }
        for (a, base) in self.baseline.iter().enumerate() {
            s.push_str(&format!("  arm {a}: {} event times\n", base.jump_times().len()));
        }
        s.push_str(&format!(
            "  iterations {}  score norm {:.2e}  converged {}\n",
            self.iterations, self.score_norm, self.converged
        ));
        s
    }
}

/// One stratum, sorted by decreasing time.
struct Stratum {
    time: Vec<f64>,
    event: Vec<bool>,
    x: Vec<Vec<f64>>,
}

impl Stratum {
    /// Visits each distinct event time (in decreasing order) with the risk
    /// set sums accumulated up to it. The closure gets the time, the number
    /// of events, the covariate sum over events, and `S0`, `S1`, `S2`.
    fn walk<F>(&self, beta: &[f64], mut visit: F)
    where
        F: FnMut(f64, f64, &[f64], f64, &[f64], &Matrix),
    {
        let p = beta.len();
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = Matrix::zeros(p, p);
        let n = self.time.len();
        let mut i = 0;
        while i < n {
            let t = self.time[i];
            let mut d = 0.0;
            let mut xsum = vec![0.0; p];
            let mut j = i;
            while j < n && self.time[j] == t {
                let x = &self.x[j];
                let w = dot(x, beta).exp();
                s0 += w;
                for k in 0..p {
                    s1[k] += w * x[k];
                    for l in 0..p {
                        s2[(k, l)] += w * x[k] * x[l];
                    }
                }
                if self.event[j] {
                    d += 1.0;
                    for k in 0..p {
                        xsum[k] += x[k];
                    }
                }
                j += 1;
            }
            if d > 0.0 {
                visit(t, d, &xsum, s0, &s1, &s2);
            }
            i = j;
        }
    }

    fn loglik(&self, beta: &[f64]) -> f64 {
        let mut ll = 0.0;
        self.walk(beta, |_, d, xsum, s0, _, _| ll += dot(xsum, beta) - d * s0.ln());
        ll
    }

    fn score_info(&self, beta: &[f64], score: &mut [f64], info: &mut Matrix) {
        let p = beta.len();
        self.walk(beta, |_, d, xsum, s0, s1, s2| {
            for k in 0..p {
                score[k] += xsum[k] - d * s1[k] / s0;
                for l in 0..p {
                    info[(k, l)] += d * (s2[(k, l)] / s0 - s1[k] * s1[l] / (s0 * s0));
                }
            }
        });
    }

    fn breslow(&self, beta: &[f64]) -> Result<StepFunction> {
        let mut jumps = Vec::new();
        self.walk(beta, |t, d, _, s0, _, _| jumps.push((t, d / s0)));
        jumps.reverse();
        let mut cum = 0.0;
        let (times, values) = jumps
            .into_iter()
            .map(|(t, dl)| {
                cum += dl;
                (t, cum)
            })
            .unzip();
        StepFunction::new(times, values, 0.0)
    }
}

/// Fits the arm-stratified Cox model for `status > 0` by Newton–Raphson on
/// the Breslow partial likelihood. A covariate that is constant within every
/// stratum carries no information and has its coefficient fixed at zero.
pub fn fit_cox_stratified(d: &Dataset, design: Design) -> Result<CoxFit> {
    let full_p = Design::P - 1;
    let by_arm: Vec<Vec<_>> = (0..2u8)
        .map(|a| {
            let mut recs: Vec<_> = d.records().iter().filter(|r| r.a == a).collect();
            recs.sort_by(|p, q| q.time.total_cmp(&p.time));
            recs
        })
        .collect();
    for (a, recs) in by_arm.iter().enumerate() {
        if !recs.iter().any(|r| r.is_event()) {
            return Err(Error::NoEvents { stratum: a as u8 });
        }
    }
    let active: Vec<usize> = (0..full_p)
        .filter(|&k| {
            by_arm.iter().any(|recs| {
                let first = design.record_row(recs[0])[k + 1];
                recs.iter().any(|r| design.record_row(r)[k + 1] != first)
            })
        })
        .collect();
    let strata: Vec<Stratum> = by_arm
        .iter()
        .map(|recs| Stratum {
            time: recs.iter().map(|r| r.time).collect(),
            event: recs.iter().map(|r| r.is_event()).collect(),
            x: recs
                .iter()
                .map(|r| {
                    let row = design.record_row(r);
                    active.iter().map(|&k| row[k + 1]).collect()
                })
                .collect(),
        })
        .collect();

    let p = active.len();
    let loglik = |b: &[f64]| strata.iter().map(|s| s.loglik(b)).sum::<f64>();
    let score_info = |b: &[f64]| {
        let mut score = vec![0.0; p];
        let mut info = Matrix::zeros(p, p);
        for s in &strata {
            s.score_info(b, &mut score, &mut info);
        }
        (score, info)
    };

    let mut beta = vec![0.0; p];
    let mut ll = loglik(&beta);
    let mut converged = false;
    let mut iterations = 0;
    let (mut score, mut info) = score_info(&beta);
    let mut score_norm = dot(&score, &score).sqrt();
    while iterations < MAX_ITER {
        if score_norm <= SCORE_TOL {
            converged = true;
            break;
        }
        let step = solve_equilibrated(&info, &score).ok_or(Error::SingularInformation)?;
        let mut t = 1.0;
        let mut cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
        let mut cand_ll = loglik(&cand);
        for _ in 0..MAX_HALVINGS {
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 * ll.abs() {
                break;
            }
            t *= 0.5;
            cand = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            cand_ll = loglik(&cand);
        }
        let moved = beta.iter().zip(&cand).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        beta = cand;
        ll = cand_ll;
        iterations += 1;
        (score, info) = score_info(&beta);
        score_norm = dot(&score, &score).sqrt();
        if moved <= 1e-15 * (1.0 + beta.iter().fold(0.0f64, |m, b| m.max(b.abs()))) {
            // Newton has stalled at rounding level
            converged = score_norm <= SCORE_TOL;
            break;
        }
    }
    let mut se = vec![0.0; p];
    for k in 0..p {
        let mut e = vec![0.0; p];
        e[k] = 1.0;
        se[k] = solve_equilibrated(&info, &e).ok_or(Error::SingularInformation)?[k].sqrt();
    }
    let baseline = [strata[0].breslow(&beta)?, strata[1].breslow(&beta)?];
    let mut full_beta = vec![0.0; full_p];
    let mut beta_se = vec![0.0; full_p];
    for (j, &k) in active.iter().enumerate() {
        full_beta[k] = beta[j];
        beta_se[k] = se[j];
    }
    Ok(CoxFit { beta: full_beta, beta_se, baseline, design, iterations, score_norm, converged })
}
