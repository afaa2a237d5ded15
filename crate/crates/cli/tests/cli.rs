use std::path::Path;
use std::process::{Command, Output};

use truncscore::testing::ClosedTestReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_truncscore"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn simulate(dir: &Path, name: &str, n: usize, seed: u64, extra: &[&str]) -> String {
    let out = dir.join(name);
    let path = out.to_str().unwrap().to_string();
    let (n, seed) = (n.to_string(), seed.to_string());
    let mut args = vec!["simulate", "--scenario", "table1", "--n", &n, "--seed", &seed, "--out", &path];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.csv", 100, 7, &[]);
    let b = simulate(dir.path(), "b.csv", 100, 7, &[]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 101);
    let c = simulate(dir.path(), "c.csv", 100, 7, &["--null"]);
    assert_ne!(text, std::fs::read_to_string(&c).unwrap());
}

#[test]
fn missing_seed_is_a_usage_error() {
    let o = run(&["simulate", "--scenario", "table1", "--n", "10", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_scenario_fails() {
    let o = run(&["simulate", "--scenario", "nope", "--n", "10", "--seed", "1", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown scenario"));
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["scenario", "table5"]);
    let toml = stdout(&o);
    assert!(toml.contains("-0.15"));
    let path = dir.path().join("s.toml");
    std::fs::write(&path, &toml).unwrap();
    let out = dir.path().join("d.csv");
    let o = run(&[
        "simulate", "--scenario", path.to_str().unwrap(), "--n", "50", "--seed", "1", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
}

#[test]
fn estimate_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", 4000, 11, &[]);
    let json = dir.path().join("e.json");
    let o = run(&["estimate", "--input", &data, "--method", "both", "--json", json.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("-- Parameter estimates").count(), 2);
    let labels: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with('E') || l.starts_with('P') || l.starts_with("diff") || l.starts_with("risk"))
        .map(|l| l.split_whitespace().next().unwrap())
        .take(6)
        .collect();
    assert_eq!(
        labels,
        ["E(Y|T>2.0,A=0)", "E(Y|T>2.0,A=1)", "diff", "P(T>2.0|A=0)", "P(T>2.0|A=1)", "riskdiff"]
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v[0]["method"], "adjusted");
    assert_eq!(v[1]["method"], "naive");
}

#[test]
fn landmark_beyond_follow_up_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", 500, 3, &[]);
    let o = run(&["estimate", "--input", &data, "--tau", "1000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).to_lowercase().contains("positivity"));
}

#[test]
fn schema_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", 1000, 3, &[]);
    let text = std::fs::read_to_string(&data).unwrap().replacen("a,x1,x2,y,time,r,status", "arm,x1,x2,score,t,r,status", 1);
    let renamed = dir.path().join("r.csv");
    std::fs::write(&renamed, text).unwrap();
    let r = renamed.to_str().unwrap();
    assert!(!run(&["estimate", "--input", r]).status.success());
    let o = run(&["estimate", "--input", r, "--col-a", "arm", "--col-y", "score", "--col-time", "t"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), stdout(&run(&["estimate", "--input", &data])));
}

#[test]
fn test_report_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", 4000, 5, &[]);
    let json = dir.path().join("t.json");
    let o = run(&[
        "test", "--input", &data, "--method", "adjusted", "--margin-t", "0.05", "--json", json.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("data:  H0: b1 =< 0\n"));
    assert!(text.contains("data:  H0: b2 =< -0.05\n"));
    assert!(text.contains("Intersection null hypothesis: b =< [0, -0.05]\n"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    let rep: ClosedTestReport = serde_json::from_value(v[0]["test"].clone()).unwrap();
    assert!(rep.closure_holds());
    assert!(rep.intersection.q_hat > 0.0 && rep.intersection.rho_hat.abs() < 1.0);
    assert!(text.contains(&format!("w = [0.5, {}]", truncscore::numfmt::format_signif(rep.intersection.q_hat, 4))));
}

#[test]
fn null_data_rejects_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", 2000, 21, &["--null"]);
    let json = dir.path().join("t.json");
    let o = run(&["test", "--input", &data, "--json", json.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    for entry in v.as_array().unwrap() {
        let rep: ClosedTestReport = serde_json::from_value(entry["test"].clone()).unwrap();
        assert!(!rep.reject_y && !rep.reject_t && !rep.holm.reject_y && !rep.holm.reject_t);
    }
}

#[test]
fn replicate_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let go = |sub: &str, threads: &str| {
        let out = dir.path().join(sub);
        let o = run(&[
            "replicate", "--scenario", "table1", "--n", "400", "--reps", "6", "--seed", "1", "--truth-reps", "1000000",
            "--threads", threads, "--out-dir", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = go("a", "1");
    let b = go("b", "3");
    for f in ["summary.csv", "power.csv", "type1.csv", "replications.csv", "replications_null.csv", "truth.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let reps = std::fs::read_to_string(a.join("replications.csv")).unwrap();
    assert_eq!(reps.lines().count(), 1 + 12);
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.starts_with("method,estimand,truth,mean,bias,mean_se,sd,se_sd,coverage,rel_eff_sd,"));
}

#[test]
fn replicate_rejects_zero_reps() {
    let o = run(&["replicate", "--n", "100", "--reps", "0", "--seed", "1", "--out-dir", "/tmp/unused"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn curves_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "curves", "--rho", "-0.5,0.57,0.8", "--reps", "100000", "--seed", "3", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let crit = std::fs::read_to_string(dir.path().join("critical_values.csv")).unwrap();
    let row: Vec<f64> = crit.lines().nth(2).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(row[0], 0.57);
    assert!((row[1] - 5.024).abs() < 0.01);
    let conj = std::fs::read_to_string(dir.path().join("power_conjunctive.csv")).unwrap();
    for line in conj.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[2] >= v[3]);
    }
    assert!(dir.path().join("power_disjunctive.csv").exists());
}

#[test]
fn curves_reject_bad_correlation() {
    let o = run(&["curves", "--rho", "0.2,1.5", "--seed", "1", "--out-dir", "/tmp/unused"]);
    assert_eq!(o.status.code(), Some(2));
}
