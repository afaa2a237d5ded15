//! Working models for the nuisance functions: per-arm outcome regression,
//! observation model, arm-stratified Cox model, and arm-wise Kaplan–Meier
//! fits for censoring and for the terminal event.

pub mod cox;
pub mod km;
pub mod logistic;
pub mod ols;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SubjectRecord};
use crate::numerics::Matrix;

pub use cox::{fit_cox_stratified, CoxFit};
pub use km::{fit_km_censoring, fit_km_event, KmFit};
pub use logistic::{fit_logistic, fit_logistic_matrix, LogisticFit};
pub use ols::{fit_ols, fit_ols_matrix, LinearFit};

/// Main-effects design `(1, x1 − c, x2)` with `x1` centred at `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub x1_center: f64,
}

impl Design {
    pub const P: usize = 3;

    /// Centres `x1` at its sample mean over the whole dataset.
    pub fn centered(d: &Dataset) -> Self {
        let n = d.len() as f64;
        let x1_center = d.records().iter().map(|r| r.x1).sum::<f64>() / n;
        Self { x1_center }
    }

    pub fn uncentered() -> Self {
        Self { x1_center: 0.0 }
    }

    pub fn row(&self, x1: f64, x2: u8) -> [f64; 3] {
        [1.0, x1 - self.x1_center, f64::from(x2)]
    }

    pub fn record_row(&self, r: &SubjectRecord) -> [f64; 3] {
        self.row(r.x1, r.x2)
    }

    pub fn matrix<'a, I>(&self, recs: I) -> Matrix
    where
        I: IntoIterator<Item = &'a SubjectRecord>,
    {
        let rows: Vec<[f64; 3]> = recs.into_iter().map(|r| self.record_row(r)).collect();
        Matrix::from_rows(&rows)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the symmetric system `m x = b` after rescaling `m` to unit
/// diagonal, so the pivot test is insensitive to column scale. Returns
/// `None` when `m` is numerically singular.
pub(crate) fn solve_equilibrated(m: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let p = m.rows();
    let scale: Vec<f64> = (0..p).map(|i| m[(i, i)]).collect();
    if scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return None;
    }
    let scale: Vec<f64> = scale.iter().map(|s| s.sqrt()).collect();
    let mut eq = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            eq[(i, j)] = m[(i, j)] / (scale[i] * scale[j]);
        }
    }
    let rhs: Vec<f64> = b.iter().zip(&scale).map(|(v, s)| v / s).collect();
    let l = eq.cholesky().ok()?;
    if (0..p).any(|j| l[(j, j)] * l[(j, j)] < 1e-10) {
        return None;
    }
    let z = crate::numerics::solve_spd(&eq, &rhs).ok()?;
    Some(z.iter().zip(&scale).map(|(v, s)| v / s).collect())
}
