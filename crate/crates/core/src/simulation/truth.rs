use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RandomSource;

use super::generate::weibull_time;
use super::ScenarioParams;

const CHUNK: usize = 100_000;

/// Population values of both contrasts with Monte Carlo standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthValues {
    pub theta_y: [f64; 2],
    pub theta_t: [f64; 2],
    pub psi_y: f64,
    pub psi_t: f64,
    pub se_psi_y: f64,
    pub se_psi_t: f64,
    pub reps: usize,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    n: usize,
    alive: [usize; 2],
    sum_y: [f64; 2],
}

impl Tally {
    fn psi(&self) -> (f64, f64) {
        let ty = |a: usize| self.sum_y[a] / self.alive[a] as f64;
        let tt = |a: usize| 1.0 - self.alive[a] as f64 / self.n as f64;
        (ty(1) - ty(0), tt(0) - tt(1))
    }
}

fn chunk_tally(sp: &ScenarioParams, mu1: f64, n: usize, mut rs: RandomSource) -> Tally {
    let mut t = Tally { n, ..Tally::default() };
    for _ in 0..n {
        let x2 = u8::from(rs.bernoulli(sp.p_x2));
        let k = x2 as usize;
        let x1 = sp.x1.mu[k] + sp.x1.sigma[k] * rs.normal();
        let x = [1.0, x1 - mu1, f64::from(x2)];
        let lin = |b: &[f64; 3]| b[0] * x[0] + b[1] * x[1] + b[2] * x[2];
        for a in 0..2 {
            let arm = sp.arm_index(a as u8);
            let y = lin(&sp.y.beta[arm]) + sp.y.sigma[arm] * rs.normal();
            let t1 = weibull_time(&mut rs, lin(&sp.eps1.beta[arm]), sp.eps1.gamma[arm]);
            let t2 = weibull_time(&mut rs, lin(&sp.eps2.beta[arm]), sp.eps2.gamma[arm]);
            if t1.min(t2) > sp.tau {
                t.alive[a] += 1;
                t.sum_y[a] += y;
            }
        }
    }
    t
}

/// Monte Carlo population values from paired potential outcomes without
/// censoring or missing scores. Each subject's covariates are shared across
/// both arms. Work is split into fixed chunks with their own child streams,
/// so the result does not depend on the thread count. Standard errors are
/// batch means over chunks.
pub fn truth_oracle(sp: &ScenarioParams, reps: usize, rs: &RandomSource) -> Result<TruthValues> {
    if reps < 1_000_000 {
        return Err(Error::Config(format!("truth oracle needs at least 1e6 replicates, got {reps}")));
    }
    sp.validate()?;
    let mu1 = sp.x1_mean();
    let chunks = reps.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(reps - c * CHUNK);
            chunk_tally(sp, mu1, n, rs.child(c as u64))
        })
        .collect();

    let mut total = Tally::default();
    for t in &tallies {
        total.n += t.n;
        for a in 0..2 {
            total.alive[a] += t.alive[a];
            total.sum_y[a] += t.sum_y[a];
        }
    }
    let (psi_y, psi_t) = total.psi();
    let k = tallies.len() as f64;
    let (mut vy, mut vt) = (0.0, 0.0);
    for t in &tallies {
        let (py, pt) = t.psi();
        vy += (py - psi_y).powi(2);
        vt += (pt - psi_t).powi(2);
    }
    let scale = 1.0 / ((k - 1.0) * k);
    Ok(TruthValues {
        theta_y: [0, 1].map(|a| total.sum_y[a] / total.alive[a] as f64),
        theta_t: [0, 1].map(|a| 1.0 - total.alive[a] as f64 / total.n as f64),
        psi_y,
        psi_t,
        se_psi_y: (vy * scale).sqrt(),
        se_psi_t: (vt * scale).sqrt(),
        reps,
    })
}
