use serde::{Deserialize, Serialize};

use super::{dot, solve_equilibrated, Design};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Least-squares fit of the score on the main-effects design within one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub residual_variance: f64,
    pub design: Design,
    pub n: usize,
}

impl LinearFit {
    pub fn predict(&self, x1: f64, x2: u8) -> f64 {
        dot(&self.coefficients, &self.design.row(x1, x2))
    }
}

/// Normal-equation solve for an arbitrary design matrix. Returns the
/// coefficients and the residual variance `RSS / (n − p)`.
pub fn fit_ols_matrix(x: &Matrix, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::Dimension(format!("{n} design rows but {} responses", y.len())));
    }
    if n < p + 1 {
        return Err(Error::InsufficientData { needed: p + 1, got: n });
    }
    let mut xtx = Matrix::zeros(p, p);
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        for j in 0..p {
            xty[j] += row[j] * y[i];
            for k in 0..=j {
                xtx[(j, k)] += row[j] * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            xtx[(k, j)] = xtx[(j, k)];
        }
    }
    let beta = solve_equilibrated(&xtx, &xty).ok_or(Error::RankDeficient)?;
    let rss: f64 = (0..n).map(|i| (y[i] - dot(x.row(i), &beta)).powi(2)).sum();
    Ok((beta, rss / (n - p) as f64))
}

/// Outcome regression `Q_a(X)` on the records of arm `a` with a usable
/// score at landmark `tau`.
pub fn fit_ols(d: &Dataset, a: u8, tau: f64, design: Design) -> Result<LinearFit> {
    let recs: Vec<_> = d.records().iter().filter(|r| r.a == a && r.observed_at(tau)).collect();
    let x = design.matrix(recs.iter().copied());
    let y: Vec<f64> = recs.iter().map(|r| r.y.unwrap_or(f64::NAN)).collect();
    let (coefficients, residual_variance) = fit_ols_matrix(&x, &y)?;
    Ok(LinearFit { coefficients, residual_variance, design, n: recs.len() })
}
