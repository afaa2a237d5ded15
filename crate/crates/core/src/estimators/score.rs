//! Estimators for the mean score among subjects free of the terminal event.

use crate::data::{Dataset, LandmarkSpec};
use crate::error::{Error, Result};

use super::NuisanceBundle;

fn arm_shares(d: &Dataset) -> [f64; 2] {
    let n = d.len() as f64;
    let [n0, n1] = d.arm_counts();
    [n0 as f64 / n, n1 as f64 / n]
}

/// Mean observed score in arm `a` and its per-subject influence values
/// `I(A=a)R/(π̂ₐρ̂ₐ)·(Y − θ̃)`.
pub fn naive_theta_y(d: &Dataset, lm: &LandmarkSpec, a: u8) -> Result<(f64, Vec<f64>)> {
    let tau = lm.tau();
    let n_arm = d.arm_counts()[a as usize];
    if n_arm == 0 {
        return Err(Error::EmptyArm(a));
    }
    let (mut sum, mut count) = (0.0, 0usize);
    for r in d.records().iter().filter(|r| r.a == a && r.observed_at(tau)) {
        sum += r.y.unwrap_or(0.0);
        count += 1;
    }
    if count == 0 {
        return Err(Error::PositivityViolation { arm: a });
    }
    let theta = sum / count as f64;
    let pi_a = arm_shares(d)[a as usize];
    let rho_a = count as f64 / n_arm as f64;
    let w = 1.0 / (pi_a * rho_a);
    let inf = d
        .records()
        .iter()
        .map(|r| match r.y {
            Some(y) if r.a == a && r.observed_at(tau) => w * (y - theta),
            _ => 0.0,
        })
        .collect();
    Ok((theta, inf))
}

/// The two parts of the efficient influence function at `θ = θ̃ₐ`: the
/// weighted residual term and the augmentation term (entered with a minus
/// sign in the EIF).
fn eif_parts(d: &Dataset, a: u8, nb: &NuisanceBundle) -> Result<(Vec<f64>, Vec<f64>)> {
    let ai = a as usize;
    let (pi1, pi_a, rho_a) = (nb.pi[1], nb.pi[ai], nb.rho[ai]);
    if !(rho_a > 0.0 && rho_a <= 1.0 && pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::PositivityViolation { arm: a });
    }
    let theta = nb.theta_y_naive[ai];
    let tau = nb.tau;
    let fa = f64::from(a);
    let mut first = Vec::with_capacity(d.len());
    let mut second = Vec::with_capacity(d.len());
    for (i, r) in d.records().iter().enumerate() {
        first.push(match r.y {
            Some(y) if r.a == a && r.observed_at(tau) => (y - theta) / (pi_a * rho_a),
            _ => 0.0,
        });
        let ar = f64::from(r.a);
        let g = (nb.q[ai][i] - theta) * nb.pr[ai][i];
        second.push((ar - pi1) * (fa - pi1) / (rho_a * pi1 * (1.0 - pi1)) * g);
    }
    Ok((first, second))
}

/// Efficient influence function of `θ_Y^(a)` evaluated at the naive
/// estimate.
pub fn eif_theta_y(d: &Dataset, a: u8, nb: &NuisanceBundle) -> Result<Vec<f64>> {
    let (first, second) = eif_parts(d, a, nb)?;
    Ok(first.iter().zip(&second).map(|(f, s)| f - s).collect())
}

/// One-step estimate `θ̃ + mean(φ)` and the centred influence values `ξ`
/// that account for estimating `π̂₁`.
pub fn onestep_theta_y(d: &Dataset, a: u8, nb: &NuisanceBundle) -> Result<(f64, Vec<f64>)> {
    let ai = a as usize;
    let (first, second) = eif_parts(d, a, nb)?;
    let n = d.len() as f64;
    let theta0 = nb.theta_y_naive[ai];
    let phi: Vec<f64> = first.iter().zip(&second).map(|(f, s)| f - s).collect();
    let mean_phi = phi.iter().sum::<f64>() / n;
    let estimate = theta0 + mean_phi;

    let (pi1, rho_a, fa) = (nb.pi[1], nb.rho[ai], f64::from(a));
    let gbar = d
        .records()
        .iter()
        .enumerate()
        .map(|(i, _)| (nb.q[ai][i] - theta0) * nb.pr[ai][i])
        .sum::<f64>()
        / n;
    let k = (pi1 - fa) / (rho_a * (1.0 - pi1) * pi1) * gbar;
    let mut xi: Vec<f64> =
        d.records().iter().zip(&phi).map(|(r, p)| p + k * (pi1 - f64::from(r.a))).collect();
    let mean_xi = xi.iter().sum::<f64>() / n;
    for v in &mut xi {
        *v -= mean_xi;
    }
    Ok((estimate, xi))
}

/// `θ̃ − mean(augmentation)`; equals the one-step estimate exactly when
/// `π̂` and `ρ̂` are the empirical proportions.
pub fn onestep_identity_theta_y(d: &Dataset, a: u8, nb: &NuisanceBundle) -> Result<f64> {
    let (_, second) = eif_parts(d, a, nb)?;
    Ok(nb.theta_y_naive[a as usize] - second.iter().sum::<f64>() / d.len() as f64)
}
