//! Signed Wald tests for the two one-sided hypotheses and their
//! intersection, the closed testing procedure with a Bonferroni–Holm
//! comparator, and the critical-value and power computations for the
//! chi-bar-squared mixture.

mod curves;
mod dykstra;
mod report;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimationResult, Method};
use crate::numerics::{chisq_sf, Matrix};

pub use curves::{
    critical_value, critical_value_curve, power_comparison, power_curve, powers_at, write_curve_csv, PowerComparison,
    PowerMode,
};
pub use dykstra::{dykstra_project, sw_dykstra, sw_grid};
pub use report::{format_decisions, format_parameter_matrix, format_summary, format_test_report};

/// Correlations this close to ±1 make the intersection test degenerate.
pub const RHO_LIMIT: f64 = 1.0 - 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    /// Superiority margin for the score contrast.
    pub delta_y: f64,
    /// Non-inferiority margin for the risk contrast.
    pub delta_t: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self { alpha: 0.025, delta_y: 0.0, delta_t: 0.0 }
    }
}

impl TestConfig {
    pub fn new(alpha: f64, delta_y: f64, delta_t: f64) -> Result<Self> {
        let cfg = Self { alpha, delta_y, delta_t };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Domain(format!("alpha must lie in (0, 0.5), got {}", self.alpha)));
        }
        if !(self.delta_y >= 0.0 && self.delta_t >= 0.0) {
            return Err(Error::Domain("margins must be non-negative".into()));
        }
        Ok(())
    }

    /// Upper corner `(δ_Y, −δ_T)` of the joint null region.
    pub fn null_corner(&self) -> [f64; 2] {
        [self.delta_y, -self.delta_t]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Y,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedWaldResult {
    pub z: f64,
    pub statistic: f64,
    pub p_value: f64,
}

/// `p` for a signed Wald statistic: half the χ²₁ tail, or 1 at zero.
pub fn single_p_value(statistic: f64) -> f64 {
    if statistic > 0.0 {
        0.5 * chisq_sf(statistic, 1).unwrap_or(1.0)
    } else {
        1.0
    }
}

/// One-sided signed Wald test. The score side tests `ψ_Y ≤ δ`, the risk
/// side tests `ψ_T ≤ −δ`.
pub fn signed_wald_single(psi_hat: f64, se: f64, margin: f64, side: Side) -> Result<SignedWaldResult> {
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::Domain(format!("standard error must be positive, got {se}")));
    }
    let z = match side {
        Side::Y => (psi_hat - margin) / se,
        Side::T => (psi_hat + margin) / se,
    };
    let statistic = if z >= 0.0 { z * z } else { 0.0 };
    Ok(SignedWaldResult { z, statistic, p_value: single_p_value(statistic) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionResult {
    pub z: [f64; 2],
    pub statistic: f64,
    pub q_hat: f64,
    pub rho_hat: f64,
    pub p_value: f64,
}

impl IntersectionResult {
    /// Weights of `χ²₀`, `χ²₁`, `χ²₂` in the null mixture.
    pub fn mixture_weights(&self) -> [f64; 3] {
        [0.5 - self.q_hat, 0.5, self.q_hat]
    }
}

/// `q = 1/4 − asin(ρ)/(2π)`.
pub fn q_hat(rho: f64) -> Result<f64> {
    if !(rho.abs() < RHO_LIMIT) {
        return Err(Error::DegenerateCovariance { rho });
    }
    Ok(0.25 - rho.asin() / (2.0 * PI))
}

/// Squared distance from `z` to the negative orthant in the metric of the
/// correlation matrix with off-diagonal `rho`, in closed form.
pub fn intersection_statistic(z1: f64, z2: f64, rho: f64) -> f64 {
    let (zmin, zmax) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
    if zmax < 0.0 {
        0.0
    } else if zmin <= rho * zmax {
        zmax * zmax
    } else {
        ((zmax - zmin).powi(2) + 2.0 * (1.0 - rho) * zmin * zmax) / (1.0 - rho * rho)
    }
}

/// Tail of the `(½ − q)χ²₀ + ½χ²₁ + qχ²₂` mixture.
pub fn mixture_p_value(statistic: f64, q: f64) -> f64 {
    if statistic > 0.0 {
        0.5 * chisq_sf(statistic, 1).unwrap_or(1.0) + q * chisq_sf(statistic, 2).unwrap_or(1.0)
    } else {
        1.0
    }
}

fn standardize(psi_hat: [f64; 2], sigma_over_n: &Matrix, margins: [f64; 2]) -> Result<([f64; 2], f64)> {
    if sigma_over_n.rows() != 2 || sigma_over_n.cols() != 2 {
        return Err(Error::Dimension("covariance must be 2x2".into()));
    }
    let (v11, v22, v12) = (sigma_over_n[(0, 0)], sigma_over_n[(1, 1)], sigma_over_n[(0, 1)]);
    if !(v11 > 0.0 && v22 > 0.0) || (v12 - sigma_over_n[(1, 0)]).abs() > 1e-12 * (v11 * v22).sqrt() {
        return Err(Error::Degenerate("covariance must be symmetric positive definite".into()));
    }
    let rho = v12 / (v11 * v22).sqrt();
    if !(rho.abs() < RHO_LIMIT) {
        return Err(Error::DegenerateCovariance { rho });
    }
    let zy = signed_wald_single(psi_hat[0], v11.sqrt(), margins[0], Side::Y)?.z;
    let zt = signed_wald_single(psi_hat[1], v22.sqrt(), margins[1], Side::T)?.z;
    Ok(([zy, zt], rho))
}

/// Intersection signed Wald test for `H_Y ∩ H_T` with margins
/// `(δ_Y, δ_T)` and `Σ̂/n` the covariance of `(ψ̂_Y, ψ̂_T)`.
pub fn signed_wald_intersection(
    psi_hat: [f64; 2],
    sigma_over_n: &Matrix,
    margins: [f64; 2],
) -> Result<IntersectionResult> {
    let (z, rho) = standardize(psi_hat, sigma_over_n, margins)?;
    let statistic = intersection_statistic(z[0], z[1], rho);
    let q = q_hat(rho)?;
    Ok(IntersectionResult { z, statistic, q_hat: q, rho_hat: rho, p_value: mixture_p_value(statistic, q) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decisions {
    pub reject_y: bool,
    pub reject_t: bool,
}

/// Two-hypothesis Bonferroni–Holm at level `alpha`.
pub fn holm(p_y: f64, p_t: f64, alpha: f64) -> Decisions {
    let (small_is_y, p_small, p_large) = if p_y <= p_t { (true, p_y, p_t) } else { (false, p_t, p_y) };
    let first = p_small <= alpha / 2.0;
    let second = first && p_large <= alpha;
    if small_is_y {
        Decisions { reject_y: first, reject_t: second }
    } else {
        Decisions { reject_y: second, reject_t: first }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedTestReport {
    pub method: Method,
    pub config: TestConfig,
    pub estimates: [f64; 2],
    pub single_y: SignedWaldResult,
    pub single_t: SignedWaldResult,
    pub intersection: IntersectionResult,
    pub reject_intersection: bool,
    pub reject_y: bool,
    pub reject_t: bool,
    pub holm: Decisions,
}

impl ClosedTestReport {
    /// Every elementary rejection is backed by a rejected intersection.
    pub fn closure_holds(&self) -> bool {
        let a = self.config.alpha;
        let ok = |rej: bool, p: f64| !rej || (self.intersection.p_value <= a && p <= a);
        ok(self.reject_y, self.single_y.p_value) && ok(self.reject_t, self.single_t.p_value)
    }
}

/// Closed testing: an elementary hypothesis is rejected when both the
/// intersection and its own one-sided test are significant at `alpha`.
pub fn closed_test(est: &EstimationResult, cfg: &TestConfig) -> Result<ClosedTestReport> {
    cfg.validate()?;
    let single_y = signed_wald_single(est.psi_y, est.se_psi_y, cfg.delta_y, Side::Y)?;
    let single_t = signed_wald_single(est.psi_t, est.se_psi_t, cfg.delta_t, Side::T)?;
    let intersection = signed_wald_intersection(est.psi(), &est.sigma_over_n(), [cfg.delta_y, cfg.delta_t])?;
    let a = cfg.alpha;
    let reject_intersection = intersection.p_value <= a;
    Ok(ClosedTestReport {
        method: est.method,
        config: *cfg,
        estimates: est.psi(),
        single_y,
        single_t,
        intersection,
        reject_intersection,
        reject_y: reject_intersection && single_y.p_value <= a,
        reject_t: reject_intersection && single_t.p_value <= a,
        holm: holm(single_y.p_value, single_t.p_value, a),
    })
}
