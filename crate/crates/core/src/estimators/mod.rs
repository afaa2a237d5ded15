//! Naive and one-step estimators of the score and risk estimands, their
//! influence functions, and the joint covariance of the two contrasts.

mod report;
mod risk;
mod score;

use serde::{Deserialize, Serialize};

use crate::data::{validate_for_estimation, Dataset, DiagnosticFlag, LandmarkSpec};
use crate::error::{Error, Result};
use crate::numerics::{norm_sf, Matrix};
use crate::nuisance::{fit_cox_stratified, fit_km_censoring, fit_logistic, fit_ols, CoxFit, Design, KmFit};

pub use report::{format_estimate_table, row_labels, tau_label};
pub use risk::{eif_theta_t, fulldata_eif_theta_t, naive_theta_t, onestep_theta_t, EventModel};
pub use score::{eif_theta_y, naive_theta_y, onestep_identity_theta_y, onestep_theta_y};

/// Two-sided 97.5% normal quantile used for Wald intervals.
pub const Z_975: f64 = 1.959964;

/// Outcome-side nuisances evaluated at every row of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct NuisanceBundle {
    /// `Q̂ₐ(Xᵢ)`, indexed `[a][i]`.
    pub q: [Vec<f64>; 2],
    /// `Π̂ₐ(Xᵢ)`, indexed `[a][i]`.
    pub pr: [Vec<f64>; 2],
    pub rho: [f64; 2],
    pub pi: [f64; 2],
    pub theta_y_naive: [f64; 2],
    pub tau: f64,
}

impl NuisanceBundle {
    /// Fits the per-arm outcome regression and observation model.
    pub fn fit(d: &Dataset, lm: &LandmarkSpec, design: Design) -> Result<Self> {
        let tau = lm.tau();
        let mut q = [Vec::new(), Vec::new()];
        let mut pr = [Vec::new(), Vec::new()];
        for a in 0..2u8 {
            let ols = fit_ols(d, a, tau, design)?;
            let logit = fit_logistic(d, a, tau, design)?;
            q[a as usize] = d.records().iter().map(|r| ols.predict(r.x1, r.x2)).collect();
            pr[a as usize] = d.records().iter().map(|r| logit.predict(r.x1, r.x2)).collect();
        }
        Self::from_predictions(d, lm, q, pr)
    }

    /// Builds a bundle from arbitrary predictions; `ρ̂`, `π̂` and the naive
    /// estimates are always the empirical ones.
    pub fn from_predictions(d: &Dataset, lm: &LandmarkSpec, q: [Vec<f64>; 2], pr: [Vec<f64>; 2]) -> Result<Self> {
        let n = d.len();
        if q.iter().chain(&pr).any(|v| v.len() != n) {
            return Err(Error::Dimension(format!("predictions must have one value per row ({n})")));
        }
        let tau = lm.tau();
        let counts = d.arm_counts();
        let mut rho = [0.0; 2];
        let mut theta = [0.0; 2];
        for a in 0..2u8 {
            let ai = a as usize;
            if counts[ai] == 0 {
                return Err(Error::EmptyArm(a));
            }
            let obs = d.records().iter().filter(|r| r.a == a && r.observed_at(tau)).count();
            rho[ai] = obs as f64 / counts[ai] as f64;
            theta[ai] = naive_theta_y(d, lm, a)?.0;
        }
        let pi = [counts[0] as f64 / n as f64, counts[1] as f64 / n as f64];
        Ok(Self { q, pr, rho, pi, theta_y_naive: theta, tau })
    }
}

/// Survival-side nuisances: the conditional event model and the arm-wise
/// censoring distribution.
#[derive(Debug, Clone)]
pub struct SurvBundle<M = CoxFit> {
    pub event: M,
    pub censoring: [KmFit; 2],
    pub pi: [f64; 2],
    pub tau: f64,
}

impl SurvBundle<CoxFit> {
    pub fn fit(d: &Dataset, lm: &LandmarkSpec, design: Design) -> Result<Self> {
        let event = fit_cox_stratified(d, design)?;
        Self::with_model(d, lm, event)
    }
}

impl<M: EventModel> SurvBundle<M> {
    pub fn with_model(d: &Dataset, lm: &LandmarkSpec, event: M) -> Result<Self> {
        let censoring = [fit_km_censoring(d, 0)?, fit_km_censoring(d, 1)?];
        let n = d.len() as f64;
        let [n0, n1] = d.arm_counts();
        Ok(Self { event, censoring, pi: [n0 as f64 / n, n1 as f64 / n], tau: lm.tau() })
    }

    /// `F(τ | a, x) = 1 − S(τ | a, x)`.
    pub fn risk(&self, a: u8, x1: f64, x2: u8) -> f64 {
        1.0 - self.event.survival(a, self.tau, x1, x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Adjusted,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Adjusted => "adjusted",
        })
    }
}

/// Estimates for both arms and both contrasts. `sigma` is the covariance of
/// `√n·(ψ̂_Y, ψ̂_T)`; standard errors are `√(Σ̂ₖₖ/n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub method: Method,
    pub tau: f64,
    pub n: usize,
    pub theta_y: [f64; 2],
    pub theta_t: [f64; 2],
    pub se_theta_y: [f64; 2],
    pub se_theta_t: [f64; 2],
    pub psi_y: f64,
    pub psi_t: f64,
    pub se_psi_y: f64,
    pub se_psi_t: f64,
    pub ci_psi_y: [f64; 2],
    pub ci_psi_t: [f64; 2],
    pub sigma: [[f64; 2]; 2],
    /// Per-subject influence values for `(ψ_Y, ψ_T)`.
    #[serde(skip)]
    pub if_contribs: Vec<[f64; 2]>,
}

impl EstimationResult {
    pub fn psi(&self) -> [f64; 2] {
        [self.psi_y, self.psi_t]
    }

    pub fn se(&self) -> [f64; 2] {
        [self.se_psi_y, self.se_psi_t]
    }

    pub fn rho(&self) -> f64 {
        self.sigma[0][1] / (self.sigma[0][0] * self.sigma[1][1]).sqrt()
    }

    pub fn sigma_matrix(&self) -> Matrix {
        Matrix::from_rows(&self.sigma)
    }

    /// `Σ̂ / n`, the covariance of `(ψ̂_Y, ψ̂_T)`.
    pub fn sigma_over_n(&self) -> Matrix {
        let n = self.n as f64;
        Matrix::from_rows(&[
            [self.sigma[0][0] / n, self.sigma[0][1] / n],
            [self.sigma[1][0] / n, self.sigma[1][1] / n],
        ])
    }

    /// Two-sided Wald p-value against zero.
    pub fn wald_p(estimate: f64, se: f64) -> f64 {
        2.0 * norm_sf((estimate / se).abs())
    }
}

fn wald_ci(est: f64, se: f64) -> [f64; 2] {
    [est - Z_975 * se, est + Z_975 * se]
}

fn mean_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

struct Parts {
    theta_y: [f64; 2],
    theta_t: [f64; 2],
    if_y: [Vec<f64>; 2],
    if_t: [Vec<f64>; 2],
}

fn assemble(method: Method, tau: f64, p: Parts) -> EstimationResult {
    let n = p.if_y[0].len();
    let nf = n as f64;
    let if_contribs: Vec<[f64; 2]> =
        (0..n).map(|i| [p.if_y[1][i] - p.if_y[0][i], p.if_t[0][i] - p.if_t[1][i]]).collect();
    let mut sigma = [[0.0; 2]; 2];
    for v in &if_contribs {
        for j in 0..2 {
            for k in 0..2 {
                sigma[j][k] += v[j] * v[k] / nf;
            }
        }
    }
    let se_theta_y = [(mean_sq(&p.if_y[0]) / nf).sqrt(), (mean_sq(&p.if_y[1]) / nf).sqrt()];
    let se_theta_t = [(mean_sq(&p.if_t[0]) / nf).sqrt(), (mean_sq(&p.if_t[1]) / nf).sqrt()];
    let psi_y = p.theta_y[1] - p.theta_y[0];
    let psi_t = p.theta_t[0] - p.theta_t[1];
    let se_psi_y = (sigma[0][0] / nf).sqrt();
    let se_psi_t = (sigma[1][1] / nf).sqrt();
    EstimationResult {
        method,
        tau,
        n,
        theta_y: p.theta_y,
        theta_t: p.theta_t,
        se_theta_y,
        se_theta_t,
        psi_y,
        psi_t,
        se_psi_y,
        se_psi_t,
        ci_psi_y: wald_ci(psi_y, se_psi_y),
        ci_psi_t: wald_ci(psi_t, se_psi_t),
        sigma,
        if_contribs,
    }
}

/// Adjusted estimates from fitted nuisance bundles.
pub fn estimate_adjusted<M: EventModel>(
    d: &Dataset,
    nb: &NuisanceBundle,
    sb: &SurvBundle<M>,
) -> Result<EstimationResult> {
    let (ty0, iy0) = onestep_theta_y(d, 0, nb)?;
    let (ty1, iy1) = onestep_theta_y(d, 1, nb)?;
    let (tt0, it0) = onestep_theta_t(d, 0, sb)?;
    let (tt1, it1) = onestep_theta_t(d, 1, sb)?;
    Ok(assemble(
        Method::Adjusted,
        nb.tau,
        Parts { theta_y: [ty0, ty1], theta_t: [tt0, tt1], if_y: [iy0, iy1], if_t: [it0, it1] },
    ))
}

/// Unadjusted estimates: observed-score means and Kaplan–Meier risks. The
/// risk contrast uses summed Greenwood variances; the score–risk covariance
/// comes from the correlation of the influence functions.
pub fn estimate_naive(d: &Dataset, lm: &LandmarkSpec) -> Result<EstimationResult> {
    let tau = lm.tau();
    let (ty0, iy0) = naive_theta_y(d, lm, 0)?;
    let (ty1, iy1) = naive_theta_y(d, lm, 1)?;
    let (tt0, gw0, it0) = naive_theta_t(d, 0, tau)?;
    let (tt1, gw1, it1) = naive_theta_t(d, 1, tau)?;
    let mut r = assemble(
        Method::Naive,
        tau,
        Parts { theta_y: [ty0, ty1], theta_t: [tt0, tt1], if_y: [iy0, iy1], if_t: [it0, it1] },
    );
    let nf = r.n as f64;
    let s_yy = r.sigma[0][0];
    let s_tt_if = r.sigma[1][1];
    let corr = if s_yy > 0.0 && s_tt_if > 0.0 { r.sigma[0][1] / (s_yy * s_tt_if).sqrt() } else { 0.0 };
    let s_tt = nf * (gw0 + gw1);
    r.sigma[1][1] = s_tt;
    r.sigma[0][1] = corr * (s_yy * s_tt).sqrt();
    r.sigma[1][0] = r.sigma[0][1];
    r.se_theta_t = [gw0.sqrt(), gw1.sqrt()];
    r.se_psi_t = (gw0 + gw1).sqrt();
    r.ci_psi_t = wald_ci(r.psi_t, r.se_psi_t);
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedScoreFit {
    pub adjusted: EstimationResult,
    pub naive: EstimationResult,
}

fn check_diagnostics(d: &Dataset, lm: &LandmarkSpec) -> Result<()> {
    let diag = validate_for_estimation(d, lm);
    for flag in &diag.flags {
        match *flag {
            DiagnosticFlag::EmptyArm { arm } => return Err(Error::EmptyArm(arm)),
            DiagnosticFlag::NoObservedScores { arm } => return Err(Error::PositivityViolation { arm }),
            DiagnosticFlag::NoneBeyondLandmark { arm } => {
                return Err(Error::CensoringPositivityViolation { arm, time: lm.tau(), value: 0.0 })
            }
            DiagnosticFlag::ObservedBeforeLandmark { .. } => {}
        }
    }
    Ok(())
}

/// Full pipeline: diagnostics, nuisance fits (with `x1` centred at its
/// sample mean), adjusted one-step estimates and the naive comparison.
pub fn estimate_truncatedscore(d: &Dataset, lm: &LandmarkSpec) -> Result<TruncatedScoreFit> {
    check_diagnostics(d, lm)?;
    let design = Design::centered(d);
    let nb = NuisanceBundle::fit(d, lm, design)?;
    let sb = SurvBundle::fit(d, lm, design)?;
    Ok(TruncatedScoreFit { adjusted: estimate_adjusted(d, &nb, &sb)?, naive: estimate_naive(d, lm)? })
}
