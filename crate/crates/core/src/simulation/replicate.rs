use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LandmarkSpec;
use crate::error::{Error, Result};
use crate::estimators::{estimate_truncatedscore, EstimationResult, Method, Z_975};
use crate::numerics::RandomSource;
use crate::testing::{closed_test, TestConfig};

use super::generate::simulate_dataset;
use super::truth::TruthValues;
use super::ScenarioParams;

/// Replications handed to the sink per block.
pub const SINK_BLOCK: usize = 250;

/// Largest tolerated share of failed replications.
pub const FAILURE_BUDGET: f64 = 0.01;

/// Estimates and test decisions of one method in one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub psi: [f64; 2],
    pub se: [f64; 2],
    pub rho: f64,
    pub p_single: [f64; 2],
    pub p_intersection: f64,
    pub reject_closed: [bool; 2],
    pub reject_holm: [bool; 2],
}

impl MethodOutcome {
    fn new(est: &EstimationResult, cfg: &TestConfig) -> Result<Self> {
        let rep = closed_test(est, cfg)?;
        Ok(Self {
            psi: est.psi(),
            se: est.se(),
            rho: est.rho(),
            p_single: [rep.single_y.p_value, rep.single_t.p_value],
            p_intersection: rep.intersection.p_value,
            reject_closed: [rep.reject_y, rep.reject_t],
            reject_holm: [rep.holm.reject_y, rep.holm.reject_t],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub adjusted: Option<MethodOutcome>,
    pub naive: Option<MethodOutcome>,
    pub error: Option<String>,
}

impl ReplicationRecord {
    pub fn outcome(&self, m: Method) -> Option<&MethodOutcome> {
        match m {
            Method::Adjusted => self.adjusted.as_ref(),
            Method::Naive => self.naive.as_ref(),
        }
    }
}

/// One simulated trial: generate, estimate both ways, test both ways.
pub fn run_replication(
    sp: &ScenarioParams,
    n: usize,
    cfg: &TestConfig,
    rep: usize,
    rs: &RandomSource,
) -> ReplicationRecord {
    let attempt = || -> Result<(MethodOutcome, MethodOutcome)> {
        let mut child = rs.child(rep as u64);
        let d = simulate_dataset(sp, n, &mut child)?;
        let fit = estimate_truncatedscore(&d, &LandmarkSpec::new(sp.tau)?)?;
        Ok((MethodOutcome::new(&fit.adjusted, cfg)?, MethodOutcome::new(&fit.naive, cfg)?))
    };
    match attempt() {
        Ok((a, nv)) => ReplicationRecord { rep, adjusted: Some(a), naive: Some(nv), error: None },
        Err(e) => ReplicationRecord { rep, adjusted: None, naive: None, error: Some(e.to_string()) },
    }
}

/// Runs `reps` replications in parallel. Replication `i` always uses child
/// stream `i`, so the records are identical for any thread count. Completed
/// blocks of [`SINK_BLOCK`] records are passed to `sink` in order before the
/// next block starts. Fails once failures exceed the budget.
pub fn run_campaign_with<F>(
    sp: &ScenarioParams,
    n: usize,
    reps: usize,
    cfg: &TestConfig,
    rs: &RandomSource,
    mut sink: F,
) -> Result<Vec<ReplicationRecord>>
where
    F: FnMut(&[ReplicationRecord]) -> Result<()>,
{
    if reps == 0 {
        return Err(Error::Config("reps must be positive".into()));
    }
    sp.validate()?;
    cfg.validate()?;
    let mut out = Vec::with_capacity(reps);
    for start in (0..reps).step_by(SINK_BLOCK) {
        let end = (start + SINK_BLOCK).min(reps);
        let block: Vec<ReplicationRecord> =
            (start..end).into_par_iter().map(|i| run_replication(sp, n, cfg, i, rs)).collect();
        sink(&block)?;
        out.extend(block);
    }
    let failures = out.iter().filter(|r| r.error.is_some()).count();
    if failures as f64 > FAILURE_BUDGET * reps as f64 {
        return Err(Error::FailureBudgetExceeded { failures, reps });
    }
    Ok(out)
}

pub fn run_campaign(
    sp: &ScenarioParams,
    n: usize,
    reps: usize,
    cfg: &TestConfig,
    rs: &RandomSource,
) -> Result<Vec<ReplicationRecord>> {
    run_campaign_with(sp, n, reps, cfg, rs, |_| Ok(()))
}

/// Operating characteristics of one estimator of one contrast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub estimand: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub mean_se: f64,
    pub sd: f64,
    pub se_sd: f64,
    pub coverage: f64,
    /// Empirical SD relative to the naive estimator.
    pub rel_eff_sd: f64,
    /// Mean SE relative to the naive estimator.
    pub rel_eff_se: f64,
    /// Squared mean-SE ratio.
    pub rel_eff_se_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub n: usize,
    pub reps: usize,
    pub failures: usize,
    pub rows: Vec<SummaryRow>,
}

impl ReplicationSummary {
    pub fn row(&self, method: Method, estimand: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.method == method && r.estimand == estimand)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// Summarises the successful replications against the population values.
pub fn summarize(records: &[ReplicationRecord], n: usize, truth: &TruthValues) -> Result<ReplicationSummary> {
    let ok: Vec<_> = records.iter().filter(|r| r.error.is_none()).collect();
    if ok.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: ok.len() });
    }
    let targets = [("psi_y", truth.psi_y), ("psi_t", truth.psi_t)];
    let mut rows = Vec::new();
    for (k, (name, tv)) in targets.into_iter().enumerate() {
        let stats = |m: Method| {
            let est: Vec<f64> = ok.iter().map(|r| r.outcome(m).unwrap().psi[k]).collect();
            let se: Vec<f64> = ok.iter().map(|r| r.outcome(m).unwrap().se[k]).collect();
            let cover = est.iter().zip(&se).filter(|(e, s)| (*e - tv).abs() <= Z_975 * *s).count();
            (mean(&est), mean(&se), sd(&est), cover as f64 / est.len() as f64)
        };
        let naive = stats(Method::Naive);
        for m in [Method::Adjusted, Method::Naive] {
            let (mu, mse, s, cov) = stats(m);
            rows.push(SummaryRow {
                method: m,
                estimand: name.to_string(),
                truth: tv,
                mean: mu,
                bias: mu - tv,
                mean_se: mse,
                sd: s,
                se_sd: mse / s,
                coverage: cov,
                rel_eff_sd: s / naive.2,
                rel_eff_se: mse / naive.1,
                rel_eff_se_sq: (mse / naive.1).powi(2),
            });
        }
    }
    Ok(ReplicationSummary { n, reps: records.len(), failures: records.len() - ok.len(), rows })
}

/// Rejection frequencies of one procedure applied to one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub method: Method,
    pub procedure: String,
    pub reject_y: f64,
    pub reject_t: f64,
    pub reject_both: f64,
    pub reject_either: f64,
}

/// Rejection frequencies of the closed test and of Holm, for both methods.
pub fn rejection_rates(records: &[ReplicationRecord]) -> Vec<RejectionRow> {
    let ok: Vec<_> = records.iter().filter(|r| r.error.is_none()).collect();
    let nf = ok.len() as f64;
    let mut rows = Vec::new();
    for m in [Method::Adjusted, Method::Naive] {
        for procedure in ["closed", "holm"] {
            let dec = |r: &ReplicationRecord| {
                let o = r.outcome(m).unwrap();
                if procedure == "closed" {
                    o.reject_closed
                } else {
                    o.reject_holm
                }
            };
            let freq = |f: &dyn Fn([bool; 2]) -> bool| ok.iter().filter(|r| f(dec(r))).count() as f64 / nf;
            rows.push(RejectionRow {
                method: m,
                procedure: procedure.to_string(),
                reject_y: freq(&|d| d[0]),
                reject_t: freq(&|d| d[1]),
                reject_both: freq(&|d| d[0] && d[1]),
                reject_either: freq(&|d| d[0] || d[1]),
            });
        }
    }
    rows
}

/// Rejection frequencies of the two single tests and the intersection test
/// at level `alpha`, for both methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeOneRow {
    pub method: Method,
    pub single_y: f64,
    pub single_t: f64,
    pub intersection: f64,
}

pub fn type1_rates(records: &[ReplicationRecord], alpha: f64) -> Vec<TypeOneRow> {
    let ok: Vec<_> = records.iter().filter(|r| r.error.is_none()).collect();
    let nf = ok.len() as f64;
    [Method::Adjusted, Method::Naive]
        .into_iter()
        .map(|m| {
            let freq = |f: &dyn Fn(&MethodOutcome) -> f64| {
                ok.iter().filter(|r| f(r.outcome(m).unwrap()) <= alpha).count() as f64 / nf
            };
            TypeOneRow {
                method: m,
                single_y: freq(&|o| o.p_single[0]),
                single_t: freq(&|o| o.p_single[1]),
                intersection: freq(&|o| o.p_intersection),
            }
        })
        .collect()
}

/// Output of a full study: the main scenario and its global-null twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub truth: TruthValues,
    pub summary: ReplicationSummary,
    pub power: Vec<RejectionRow>,
    pub type1: Vec<TypeOneRow>,
}

/// Replicates a scenario at sample size `n`: operating characteristics and
/// power from the scenario itself, type-1 error from its null version.
/// `truth` is usually the output of `truth_oracle`.
pub fn replicate_study(
    sp: &ScenarioParams,
    n: usize,
    reps: usize,
    cfg: &TestConfig,
    truth: TruthValues,
    rs: &RandomSource,
) -> Result<StudyResult> {
    if reps < 100 {
        return Err(Error::Config(format!("a study needs at least 100 replications, got {reps}")));
    }
    let main = run_campaign(sp, n, reps, cfg, &rs.child(0))?;
    let null = ScenarioParams { null: true, ..sp.clone() };
    let nul = run_campaign(&null, n, reps, cfg, &rs.child(1))?;
    Ok(StudyResult {
        truth,
        summary: summarize(&main, n, &truth)?,
        power: rejection_rates(&main),
        type1: type1_rates(&nul, cfg.alpha),
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_summary_csv(s: &ReplicationSummary, path: impl AsRef<Path>) -> Result<()> {
    write_rows(&s.rows, path.as_ref())
}

pub fn write_power_csv(rows: &[RejectionRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, path.as_ref())
}

pub fn write_type1_csv(rows: &[TypeOneRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, path.as_ref())
}

/// Header of the per-replication CSV written by [`ReplicationWriter`].
pub const REPLICATION_HEADER: &str = "rep,method,psi_y,psi_t,se_y,se_t,rho,p_y,p_t,p_int,\
closed_y,closed_t,holm_y,holm_t,error";

/// Appends per-replication rows and flushes after each block.
pub struct ReplicationWriter<W: Write> {
    inner: W,
}

impl<W: Write> ReplicationWriter<W> {
    pub fn new(mut inner: W) -> std::io::Result<Self> {
        writeln!(inner, "{REPLICATION_HEADER}")?;
        Ok(Self { inner })
    }

    pub fn write_block(&mut self, block: &[ReplicationRecord]) -> std::io::Result<()> {
        for r in block {
            match &r.error {
                Some(e) => writeln!(self.inner, "{},,,,,,,,,,,,,,\"{}\"", r.rep, e.replace('"', "'"))?,
                None => {
                    for m in [Method::Adjusted, Method::Naive] {
                        let o = r.outcome(m).unwrap();
                        let b = |x: bool| u8::from(x);
                        writeln!(
                            self.inner,
                            "{},{m},{},{},{},{},{},{},{},{},{},{},{},{},",
                            r.rep,
                            o.psi[0],
                            o.psi[1],
                            o.se[0],
                            o.se[1],
                            o.rho,
                            o.p_single[0],
                            o.p_single[1],
                            o.p_intersection,
                            b(o.reject_closed[0]),
                            b(o.reject_closed[1]),
                            b(o.reject_holm[0]),
                            b(o.reject_holm[1]),
                        )?;
                    }
                }
            }
        }
        self.inner.flush()
    }
}
