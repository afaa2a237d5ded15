use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect_decreasing, norm_quantile, RandomSource};

use super::{intersection_statistic, mixture_p_value, q_hat};

const BLOCK: usize = 1 << 16;
const MIN_REPS: usize = 100_000;

/// Critical value `c` of the intersection test: the point where the
/// `(½ − q)χ²₀ + ½χ²₁ + qχ²₂` tail equals `alpha`.
pub fn critical_value(rho: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Domain(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Domain(format!("correlation must lie in (-1, 1), got {rho}")));
    }
    let q = q_hat(rho)?;
    bisect_decreasing(|c| mixture_p_value(c, q), alpha, 1e-6, 30.0)
}

pub fn critical_value_curve(rhos: &[f64], alpha: f64) -> Result<Vec<(f64, f64)>> {
    rhos.iter().map(|&r| Ok((r, critical_value(r, alpha)?))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerMode {
    /// Both hypotheses rejected.
    Conjunctive,
    /// At least one hypothesis rejected.
    Disjunctive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison {
    pub rho: f64,
    pub r_star: f64,
    pub power_proposed: f64,
    pub power_holm: f64,
}

/// Standard bivariate normal pairs `(e₁, e₂)` with independent components,
/// generated in fixed-size blocks so the result does not depend on the
/// thread count.
fn draws(reps: usize, rs: &RandomSource) -> Vec<[f64; 2]> {
    let blocks = reps.div_ceil(BLOCK);
    let mut out: Vec<[f64; 2]> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut g = rs.child(b as u64);
            let len = BLOCK.min(reps - b * BLOCK);
            (0..len).map(move |_| [g.normal(), g.normal()]).collect::<Vec<_>>()
        })
        .collect();
    out.truncate(reps);
    out
}

struct Thresholds {
    rho: f64,
    s: f64,
    c: f64,
    z_a: f64,
    z_half: f64,
}

impl Thresholds {
    fn new(rho: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            rho,
            s: (1.0 - rho * rho).sqrt(),
            c: critical_value(rho, alpha)?,
            z_a: norm_quantile(1.0 - alpha)?,
            z_half: norm_quantile(1.0 - alpha / 2.0)?,
        })
    }

    fn z(&self, e: &[f64; 2], r: f64) -> (f64, f64) {
        (r + e[0], r + self.rho * e[0] + self.s * e[1])
    }

    fn proposed(&self, z1: f64, z2: f64) -> (bool, bool) {
        let inter = intersection_statistic(z1, z2, self.rho) >= self.c;
        (inter && z1 >= self.z_a, inter && z2 >= self.z_a)
    }

    fn holm(&self, z1: f64, z2: f64) -> (bool, bool) {
        let first = z1.max(z2) >= self.z_half;
        let both = first && z1.min(z2) >= self.z_a;
        if z1 >= z2 {
            (first, both)
        } else {
            (both, first)
        }
    }
}

fn success(mode: PowerMode, d: (bool, bool)) -> bool {
    match mode {
        PowerMode::Conjunctive => d.0 && d.1,
        PowerMode::Disjunctive => d.0 || d.1,
    }
}

fn rate<F>(draws: &[[f64; 2]], hit: F) -> f64
where
    F: Fn(&[f64; 2]) -> bool + Sync,
{
    let count: usize = draws.par_chunks(BLOCK).map(|c| c.iter().filter(|e| hit(e)).count()).sum();
    count as f64 / draws.len() as f64
}

/// Powers of the proposed procedure and of Holm at noncentrality `r`
/// (both `z` means equal `r`).
pub fn powers_at(rho: f64, alpha: f64, mode: PowerMode, r: f64, reps: usize, rs: &RandomSource) -> Result<(f64, f64)> {
    let th = Thresholds::new(rho, alpha)?;
    let e = draws(reps, rs);
    let prop = rate(&e, |x| {
        let (z1, z2) = th.z(x, r);
        success(mode, th.proposed(z1, z2))
    });
    let holm = rate(&e, |x| {
        let (z1, z2) = th.z(x, r);
        success(mode, th.holm(z1, z2))
    });
    Ok((prop, holm))
}

/// Finds the common noncentrality at which Holm reaches `target` power in
/// the given mode, then evaluates the proposed procedure on the same draws.
pub fn power_comparison(
    rho: f64,
    alpha: f64,
    mode: PowerMode,
    target: f64,
    reps: usize,
    rs: &RandomSource,
) -> Result<PowerComparison> {
    if reps < MIN_REPS {
        return Err(Error::Config(format!("power simulation needs at least {MIN_REPS} draws, got {reps}")));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target power must lie in (0, 1), got {target}")));
    }
    let th = Thresholds::new(rho, alpha)?;
    let e = draws(reps, rs);
    let holm_power = |r: f64| {
        rate(&e, |x| {
            let (z1, z2) = th.z(x, r);
            success(mode, th.holm(z1, z2))
        })
    };
    // power increases in r, so bisect on its complement
    let r_star = bisect_decreasing(|r| 1.0 - holm_power(r), 1.0 - target, 0.0, 8.0)?;
    let power_holm = holm_power(r_star);
    if (power_holm - target).abs() > 1e-3 {
        return Err(Error::NonConvergence { iterations: 0, residual: power_holm - target });
    }
    let power_proposed = rate(&e, |x| {
        let (z1, z2) = th.z(x, r_star);
        success(mode, th.proposed(z1, z2))
    });
    Ok(PowerComparison { rho, r_star, power_proposed, power_holm })
}

/// Power comparison at each correlation, each point with its own child
/// stream.
pub fn power_curve(
    rhos: &[f64],
    alpha: f64,
    mode: PowerMode,
    target: f64,
    reps: usize,
    rs: &RandomSource,
) -> Result<Vec<PowerComparison>> {
    rhos.iter()
        .enumerate()
        .map(|(i, &rho)| power_comparison(rho, alpha, mode, target, reps, &rs.child(i as u64)))
        .collect()
}

pub fn write_curve_csv(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::chisq_sf;

    #[test]
    fn anchor_value() {
        let c = critical_value(0.57, 0.025).unwrap();
        assert!((5.014..=5.034).contains(&c), "{c}");
        let q = q_hat(0.57).unwrap();
        assert!((0.5 * chisq_sf(c, 1).unwrap() + q * chisq_sf(c, 2).unwrap() - 0.025).abs() < 1e-9);
        // upper α/2 point of the ½χ²₀ + ½χ²₁ mixture lies in the same band
        let z = norm_quantile(1.0 - 0.025 / 2.0).unwrap();
        assert!((z * z - 5.0239).abs() < 1e-3 && (c - z * z).abs() < 0.01);
    }

    #[test]
    fn limit_near_one() {
        let c = critical_value(1.0 - 1e-9, 0.025).unwrap();
        assert!((c - 3.8415).abs() < 1e-3, "{c}");
    }

    #[test]
    fn decreasing_in_rho() {
        let rhos: Vec<f64> = (0..50).map(|i| -0.98 + 1.96 * i as f64 / 49.0).collect();
        let curve = critical_value_curve(&rhos, 0.025).unwrap();
        assert!(curve.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(critical_value(1.5, 0.025).is_err());
        assert!(critical_value(0.3, 0.7).is_err());
        let rs = RandomSource::new(1);
        assert!(matches!(
            power_comparison(0.3, 0.025, PowerMode::Conjunctive, 0.8, 10, &rs),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn draws_do_not_depend_on_thread_count() {
        let rs = RandomSource::new(8);
        let a = draws(3 * BLOCK + 17, &rs);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| draws(3 * BLOCK + 17, &rs));
        assert_eq!(a, b);
    }

    #[test]
    fn conjunctive_dominance_and_null_sanity() {
        let rs = RandomSource::new(21);
        for &rho in &[-0.5, 0.0, 0.57] {
            let pc = power_comparison(rho, 0.025, PowerMode::Conjunctive, 0.8, 200_000, &rs).unwrap();
            assert!(pc.power_proposed >= pc.power_holm, "{pc:?}");
        }
        let (prop, holm) = powers_at(0.0, 0.025, PowerMode::Conjunctive, 0.0, 200_000, &rs).unwrap();
        assert!(prop <= 0.025 && holm <= 0.025);
    }

    #[test]
    fn disjunctive_gain_at_high_correlation() {
        let rs = RandomSource::new(4);
        let pc = power_comparison(0.8, 0.025, PowerMode::Disjunctive, 0.8, 200_000, &rs).unwrap();
        assert!(pc.power_proposed >= pc.power_holm, "{pc:?}");
    }
}
