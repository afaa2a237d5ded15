use serde::{Deserialize, Serialize};

use super::{dot, solve_equilibrated, Design};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{expit, Matrix};

const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 10;
const SCORE_TOL: f64 = 1e-8;
const SEPARATION_BOUND: f64 = 30.0;

/// Observation model `Π_a(X) = P(R = 1 | A = a, X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub score_norm: f64,
    pub design: Design,
}

impl LogisticFit {
    pub fn predict(&self, x1: f64, x2: u8) -> f64 {
        expit(dot(&self.coefficients, &self.design.row(x1, x2)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsOutcome {
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub score_norm: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn deviance(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    (0..x.rows())
        .map(|i| {
            let eta = dot(x.row(i), beta);
            2.0 * (y[i] * softplus(-eta) + (1.0 - y[i]) * softplus(eta))
        })
        .sum()
}

/// Score vector `Xᵀ(y − p)` and Fisher information `XᵀWX`.
fn score_and_info(x: &Matrix, y: &[f64], beta: &[f64]) -> (Vec<f64>, Matrix) {
    let p = x.cols();
    let mut score = vec![0.0; p];
    let mut info = Matrix::zeros(p, p);
    for i in 0..x.rows() {
        let row = x.row(i);
        let mu = expit(dot(row, beta));
        let w = mu * (1.0 - mu);
        for j in 0..p {
            score[j] += row[j] * (y[i] - mu);
            for k in 0..=j {
                info[(j, k)] += w * row[j] * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            info[(k, j)] = info[(j, k)];
        }
    }
    (score, info)
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton–Raphson (IRLS) for a binary response with step-halving on
/// deviance increases. Returns the last iterate with `converged = false`
/// if the score norm has not reached 1e-8 after 100 iterations.
pub fn fit_logistic_matrix(x: &Matrix, y: &[f64]) -> Result<IrlsOutcome> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::Dimension(format!("{n} design rows but {} responses", y.len())));
    }
    if n < p + 1 {
        return Err(Error::InsufficientData { needed: p + 1, got: n });
    }
    let ones = y.iter().filter(|&&v| v > 0.5).count();
    if ones == 0 || ones == n {
        return Err(Error::Separation { max_abs_coef: f64::INFINITY });
    }

    let mut beta = vec![0.0; p];
    let mut dev = deviance(x, y, &beta);
    let mut score_norm = f64::INFINITY;
    for iter in 0..MAX_ITER {
        let (score, info) = score_and_info(x, y, &beta);
        score_norm = dot(&score, &score).sqrt();
        if score_norm <= SCORE_TOL {
            return Ok(IrlsOutcome { coefficients: beta, converged: true, iterations: iter, score_norm });
        }
        let step = solve_equilibrated(&info, &score).ok_or(Error::RankDeficient)?;
        let mut t = 1.0;
        let mut candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
        let mut cand_dev = deviance(x, y, &candidate);
        for _ in 0..MAX_HALVINGS {
            if cand_dev <= dev * (1.0 + 1e-12) {
                break;
            }
            t *= 0.5;
            candidate = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            cand_dev = deviance(x, y, &candidate);
        }
        beta = candidate;
        dev = cand_dev;
        let big = max_norm(&beta);
        if big > SEPARATION_BOUND {
            return Err(Error::Separation { max_abs_coef: big });
        }
    }
    Ok(IrlsOutcome { coefficients: beta, converged: false, iterations: MAX_ITER, score_norm })
}

/// Observation model for arm `a`, fitted on every record of the arm with
/// outcome "score usable at `tau`".
pub fn fit_logistic(d: &Dataset, a: u8, tau: f64, design: Design) -> Result<LogisticFit> {
    let recs: Vec<_> = d.records().iter().filter(|r| r.a == a).collect();
    let x = design.matrix(recs.iter().copied());
    let y: Vec<f64> = recs.iter().map(|r| f64::from(u8::from(r.observed_at(tau)))).collect();
    let out = fit_logistic_matrix(&x, &y)?;
    Ok(LogisticFit {
        coefficients: out.coefficients,
        converged: out.converged,
        iterations: out.iterations,
        score_norm: out.score_norm,
        design,
    })
}
