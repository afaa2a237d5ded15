use crate::error::{Error, Result};
use crate::numerics::{inverse_2x2, sym_sqrt_2x2, Matrix};

use super::standardize;

const TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100_000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection of `point` onto `{u : aⱼᵀu ≤ 0 for all j}` by
/// Dykstra's cyclic algorithm.
pub fn dykstra_project(point: &[f64], halfspaces: &[Vec<f64>]) -> Result<Vec<f64>> {
    if halfspaces.is_empty() {
        return Err(Error::Domain("at least one half-space is required".into()));
    }
    let d = point.len();
    for a in halfspaces {
        if a.len() != d {
            return Err(Error::Dimension(format!("normal of length {} for a point of length {d}", a.len())));
        }
        if dot(a, a) == 0.0 {
            return Err(Error::Domain("half-space normal must be non-zero".into()));
        }
    }
    let norms: Vec<f64> = halfspaces.iter().map(|a| dot(a, a)).collect();
    let mut x = point.to_vec();
    let mut incr = vec![vec![0.0; d]; halfspaces.len()];
    let mut y = vec![0.0; d];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for (j, a) in halfspaces.iter().enumerate() {
            for k in 0..d {
                y[k] = x[k] + incr[j][k];
            }
            let s = dot(a, &y);
            let shift = if s > 0.0 { s / norms[j] } else { 0.0 };
            for k in 0..d {
                let new_x = y[k] - shift * a[k];
                let new_p = y[k] - new_x;
                change = change.max((new_x - x[k]).abs()).max((new_p - incr[j][k]).abs());
                x[k] = new_x;
                incr[j][k] = new_p;
            }
        }
        residual = change;
        if change <= TOL {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence { iterations: MAX_SWEEPS, residual })
}

/// Intersection statistic by projecting the whitened estimate onto the
/// transformed null cone.
pub fn sw_dykstra(psi_hat: [f64; 2], sigma_over_n: &Matrix, margins: [f64; 2]) -> Result<f64> {
    let (z, rho) = standardize(psi_hat, sigma_over_n, margins)?;
    let corr = Matrix::from_rows(&[[1.0, rho], [rho, 1.0]]);
    let root = sym_sqrt_2x2(&corr)?;
    let u = inverse_2x2(&root)?.mul_vec(&z)?;
    let normals = vec![root.row(0).to_vec(), root.row(1).to_vec()];
    let p = dykstra_project(&u, &normals)?;
    Ok((u[0] - p[0]).powi(2) + (u[1] - p[1]).powi(2))
}

/// Intersection statistic by direct minimisation of
/// `(ψ̂ − ψ)ᵀ V⁻¹ (ψ̂ − ψ)` over `ψ ≤ (δ_Y, −δ_T)`: a dense grid along each
/// boundary ray followed by ternary refinement.
pub fn sw_grid(psi_hat: [f64; 2], sigma_over_n: &Matrix, margins: [f64; 2]) -> Result<f64> {
    let corner = [margins[0], -margins[1]];
    let r0 = [psi_hat[0] - corner[0], psi_hat[1] - corner[1]];
    if r0[0] <= 0.0 && r0[1] <= 0.0 {
        return Ok(0.0);
    }
    let vinv = inverse_2x2(sigma_over_n)?;
    let quad = |r: [f64; 2]| {
        vinv[(0, 0)] * r[0] * r[0] + 2.0 * vinv[(0, 1)] * r[0] * r[1] + vinv[(1, 1)] * r[1] * r[1]
    };
    let mut best = f64::INFINITY;
    for k in 0..2 {
        let j = 1 - k;
        // moving ψₖ down by t adds t to the k-th residual
        let along = |t: f64| {
            let mut r = r0;
            r[k] += t;
            quad(r)
        };
        let reach = (sigma_over_n[(k, j)] / sigma_over_n[(j, j)]).abs() * r0[j].abs() + r0[k].abs();
        let hi = 2.0 * reach + 1e-12;
        const GRID: usize = 2000;
        let step = hi / GRID as f64;
        let (mut arg, mut val) = (0usize, along(0.0));
        for i in 1..=GRID {
            let v = along(i as f64 * step);
            if v < val {
                arg = i;
                val = v;
            }
        }
        let mut lo = arg.saturating_sub(1) as f64 * step;
        let mut up = ((arg + 1).min(GRID)) as f64 * step;
        for _ in 0..200 {
            let m1 = lo + (up - lo) / 3.0;
            let m2 = up - (up - lo) / 3.0;
            if along(m1) <= along(m2) {
                up = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(val).min(along(0.5 * (lo + up)));
    }
    Ok(best)
}
