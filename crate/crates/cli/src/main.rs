use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use truncscore::data::{read_csv, write_csv, ColumnSchema, Dataset, LandmarkSpec};
use truncscore::estimators::{estimate_truncatedscore, format_estimate_table, EstimationResult};
use truncscore::numerics::RandomSource;
use truncscore::numfmt::{format_signif, render_table};
use truncscore::simulation::{
    rejection_rates, run_campaign_with, simulate_dataset, summarize, truth_oracle, type1_rates, write_power_csv,
    write_summary_csv, write_type1_csv, ReplicationSummary, ReplicationWriter, RejectionRow, ScenarioParams,
    TypeOneRow,
};
use truncscore::testing::{
    closed_test, critical_value_curve, format_decisions, format_parameter_matrix, format_summary, power_curve, write_curve_csv, ClosedTestReport, PowerMode,
    TestConfig,
};

#[derive(Parser, Debug)]
#[command(name = "truncscore", version)]
#[command(about = "Score-at-landmark and terminal-event risk: estimation, closed testing, simulation")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a trial dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate both contrasts from a dataset.
    Estimate(EstimateArgs),
    /// Estimate and run the one-sided, intersection and closed tests.
    Test(TestArgs),
    /// Replicate a scenario many times and summarise operating characteristics.
    Replicate(ReplicateArgs),
    /// Critical-value and power-comparison curves over a correlation grid.
    Curves(CurvesArgs),
    /// Print a built-in scenario as TOML.
    Scenario {
        #[arg(default_value = "table1")]
        name: String,
    },
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Built-in scenario (table1, table5, table1-null) or a TOML file.
    #[arg(long, default_value = "table1")]
    scenario: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    #[arg(long)]
    seed: u64,
    /// Generate the active arm from the control-arm parameters.
    #[arg(long)]
    null: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Naive,
    Adjusted,
    Both,
}

#[derive(Args, Debug)]
struct SchemaArgs {
    #[arg(long, default_value = "a")]
    col_a: String,
    #[arg(long, default_value = "x1")]
    col_x1: String,
    #[arg(long, default_value = "x2")]
    col_x2: String,
    #[arg(long, default_value = "y")]
    col_y: String,
    #[arg(long, default_value = "time")]
    col_time: String,
    #[arg(long, default_value = "r")]
    col_r: String,
    #[arg(long, default_value = "status")]
    col_status: String,
}

impl SchemaArgs {
    fn schema(&self) -> ColumnSchema {
        ColumnSchema {
            a: self.col_a.clone(),
            x1: self.col_x1.clone(),
            x2: self.col_x2.clone(),
            y: self.col_y.clone(),
            time: self.col_time.clone(),
            r: self.col_r.clone(),
            status: self.col_status.clone(),
        }
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Landmark time.
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Write the full results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    schema: SchemaArgs,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    est: EstimateArgs,
    #[arg(long, default_value_t = 0.025)]
    alpha: f64,
    /// Superiority margin for the score contrast.
    #[arg(long, default_value_t = 0.0)]
    margin_y: f64,
    /// Non-inferiority margin for the risk contrast.
    #[arg(long, default_value_t = 0.0)]
    margin_t: f64,
}

#[derive(Args, Debug)]
struct ReplicateArgs {
    #[arg(long, default_value = "table1")]
    scenario: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    reps: u64,
    #[arg(long)]
    seed: u64,
    /// Draws for the population values of the contrasts.
    #[arg(long, default_value_t = 10_000_000)]
    truth_reps: u64,
    #[arg(long, default_value_t = 0.025)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    margin_y: f64,
    #[arg(long, default_value_t = 0.0)]
    margin_t: f64,
    /// Skip the global-null campaign used for the type-1 table.
    #[arg(long)]
    skip_null: bool,
    #[arg(long, env = "TRUNCSCORE_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_rho(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{s}: {e}"))?;
    if v > -1.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("correlation {v} outside (-1, 1)"))
    }
}

#[derive(Args, Debug)]
struct CurvesArgs {
    /// Comma-separated correlation grid.
    #[arg(long, value_delimiter = ',', value_parser = parse_rho, allow_hyphen_values = true,
          default_value = "-0.9,-0.8,-0.7,-0.6,-0.5,-0.4,-0.3,-0.2,-0.1,0,0.1,0.2,0.3,0.4,0.5,0.57,0.6,0.7,0.8,0.9")]
    rho: Vec<f64>,
    #[arg(long, default_value_t = 0.025)]
    alpha: f64,
    /// Target Holm power defining the noncentrality at each grid point.
    #[arg(long, default_value_t = 0.8)]
    target: f64,
    #[arg(long, default_value_t = 1_000_000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = "TRUNCSCORE_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

fn load_scenario(name: &str) -> Result<ScenarioParams> {
    if let Some(sp) = ScenarioParams::builtin(name) {
        return Ok(sp);
    }
    let path = Path::new(name);
    if !path.exists() {
        bail!("unknown scenario `{name}`: not a built-in (table1, table5, table1-null) and no such file");
    }
    Ok(ScenarioParams::from_toml_file(path)?)
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring worker threads")?;
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut sp = load_scenario(&args.scenario)?;
    sp.null |= args.null;
    let d = simulate_dataset(&sp, args.n as usize, &mut RandomSource::new(args.seed))?;
    write_csv(&d, &args.out)?;
    let [n0, n1] = d.arm_counts();
    println!("wrote {} rows to {} (arm 0: {n0}, arm 1: {n1})", d.len(), args.out.display());
    Ok(())
}

fn load(args: &EstimateArgs) -> Result<(Dataset, LandmarkSpec)> {
    let d = read_csv(&args.input, &args.schema.schema())?;
    Ok((d, LandmarkSpec::new(args.tau)?))
}

fn selected(method: MethodArg, adjusted: EstimationResult, naive: EstimationResult) -> Vec<EstimationResult> {
    match method {
        MethodArg::Adjusted => vec![adjusted],
        MethodArg::Naive => vec![naive],
        MethodArg::Both => vec![adjusted, naive],
    }
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let (d, lm) = load(&args)?;
    let fit = estimate_truncatedscore(&d, &lm)?;
    let results = selected(args.method, fit.adjusted, fit.naive);
    for r in &results {
        println!("-- Parameter estimates ({}) --", r.method);
        print!("{}", format_estimate_table(r));
        println!();
    }
    if let Some(path) = &args.json {
        write_json(&results, path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TestOutput {
    estimates: EstimationResult,
    test: ClosedTestReport,
}

fn test(args: TestArgs) -> Result<()> {
    let cfg = TestConfig::new(args.alpha, args.margin_y, args.margin_t)?;
    let (d, lm) = load(&args.est)?;
    let fit = estimate_truncatedscore(&d, &lm)?;
    let mut out = Vec::new();
    for r in selected(args.est.method, fit.adjusted, fit.naive) {
        let rep = closed_test(&r, &cfg)?;
        println!("==== {} ====", r.method);
        print!("{}", format_summary(&r, &rep));
        println!();
        print!("{}", format_decisions(&rep));
        println!();
        print!("{}", format_parameter_matrix(&rep));
        println!();
        out.push(TestOutput { estimates: r, test: rep });
    }
    if let Some(path) = &args.est.json {
        write_json(&out, path)?;
    }
    Ok(())
}

fn sig(x: f64) -> String {
    format_signif(x, 4)
}

fn print_summary(s: &ReplicationSummary) {
    let header = ["truth", "mean", "bias", "SE", "SD", "SE/SD", "coverage", "rel.eff(SD)", "rel.eff(SE)", "SE ratio^2"];
    let rows: Vec<(String, Vec<String>)> = s
        .rows
        .iter()
        .map(|r| {
            let cells = [
                r.truth,
                r.mean,
                r.bias,
                r.mean_se,
                r.sd,
                r.se_sd,
                r.coverage,
                r.rel_eff_sd,
                r.rel_eff_se,
                r.rel_eff_se_sq,
            ];
            (format!("{} {}", r.estimand, r.method), cells.iter().map(|&v| sig(v)).collect())
        })
        .collect();
    print!("{}", render_table(&header, &rows));
}

fn print_power(rows: &[RejectionRow]) {
    let table: Vec<(String, Vec<String>)> = rows
        .iter()
        .map(|r| {
            (
                format!("{} {}", r.method, r.procedure),
                [r.reject_y, r.reject_t, r.reject_both, r.reject_either].iter().map(|&v| sig(v)).collect(),
            )
        })
        .collect();
    print!("{}", render_table(&["H_Y", "H_T", "both", "either"], &table));
}

fn print_type1(rows: &[TypeOneRow]) {
    let table: Vec<(String, Vec<String>)> = rows
        .iter()
        .map(|r| (r.method.to_string(), [r.single_y, r.single_t, r.intersection].iter().map(|&v| sig(v)).collect()))
        .collect();
    print!("{}", render_table(&["single Y", "single T", "intersection"], &table));
}

fn campaign(
    sp: &ScenarioParams,
    args: &ReplicateArgs,
    cfg: &TestConfig,
    rs: &RandomSource,
    path: &Path,
) -> Result<Vec<truncscore::simulation::ReplicationRecord>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = ReplicationWriter::new(BufWriter::new(file))?;
    let records = run_campaign_with(sp, args.n as usize, args.reps as usize, cfg, rs, |block| {
        writer
            .write_block(block)
            .map_err(|source| truncscore::Error::Io { path: path.to_path_buf(), source })
    })?;
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("{failures} of {} replications failed; see {}", records.len(), path.display());
    }
    Ok(records)
}

fn replicate(args: ReplicateArgs) -> Result<()> {
    set_threads(args.threads)?;
    let sp = load_scenario(&args.scenario)?;
    let cfg = TestConfig::new(args.alpha, args.margin_y, args.margin_t)?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let root = RandomSource::new(args.seed);
    let dir = &args.out_dir;

    let truth = truth_oracle(&sp, args.truth_reps as usize, &root.child(0))?;
    write_json(&truth, &dir.join("truth.json"))?;
    println!(
        "population values: psi_y = {} (MC SE {}), psi_t = {} (MC SE {})",
        sig(truth.psi_y),
        sig(truth.se_psi_y),
        sig(truth.psi_t),
        sig(truth.se_psi_t)
    );

    let main = campaign(&sp, &args, &cfg, &root.child(1), &dir.join("replications.csv"))?;
    let summary = summarize(&main, args.n as usize, &truth)?;
    let power = rejection_rates(&main);
    write_summary_csv(&summary, dir.join("summary.csv"))?;
    write_power_csv(&power, dir.join("power.csv"))?;
    println!("\n-- Operating characteristics (n = {}, {} replications, {} failed) --", args.n, summary.reps, summary.failures);
    print_summary(&summary);
    println!("\n-- Rejection rates --");
    print_power(&power);

    if !args.skip_null {
        let null = ScenarioParams { null: true, ..sp };
        let recs = campaign(&null, &args, &cfg, &root.child(2), &dir.join("replications_null.csv"))?;
        let type1 = type1_rates(&recs, cfg.alpha);
        write_type1_csv(&type1, dir.join("type1.csv"))?;
        println!("\n-- Type-1 error under the global null --");
        print_type1(&type1);
    }
    Ok(())
}

fn curves(args: CurvesArgs) -> Result<()> {
    set_threads(args.threads)?;
    if args.rho.is_empty() {
        bail!("the correlation grid is empty");
    }
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let crit = critical_value_curve(&args.rho, args.alpha)?;
    let rows: Vec<Vec<f64>> = crit.iter().map(|&(r, c)| vec![r, c]).collect();
    write_curve_csv(args.out_dir.join("critical_values.csv"), &["rho", "critical_value"], &rows)?;
    let root = RandomSource::new(args.seed);
    for (k, (mode, name)) in [(PowerMode::Conjunctive, "conjunctive"), (PowerMode::Disjunctive, "disjunctive")]
        .into_iter()
        .enumerate()
    {
        let curve = power_curve(&args.rho, args.alpha, mode, args.target, args.reps, &root.child(k as u64))?;
        let rows: Vec<Vec<f64>> =
            curve.iter().map(|p| vec![p.rho, p.r_star, p.power_proposed, p.power_holm]).collect();
        write_curve_csv(
            args.out_dir.join(format!("power_{name}.csv")),
            &["rho", "noncentrality", "proposed", "holm"],
            &rows,
        )?;
    }
    println!("wrote {} grid points to {}", args.rho.len(), args.out_dir.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Test(a) => test(a),
        Command::Replicate(a) => replicate(a),
        Command::Curves(a) => curves(a),
        Command::Scenario { name } => {
            let sp = ScenarioParams::builtin(&name).with_context(|| format!("unknown scenario `{name}`"))?;
            print!("{}", sp.to_toml_string()?);
            Ok(())
        }
    }
}
