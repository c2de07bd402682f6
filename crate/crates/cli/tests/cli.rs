use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hocp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hocp")).args(args).current_dir(dir).output().expect("binary runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "j,eps,f,dist,bundle_size,inner_iters,oracle_calls,boundary_active,gap,crit"
    );
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

// bigfloat columns carry 40 digits; f64 is plenty for the comparisons below
fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn assert_envelope_from_2(path: &Path) {
    let rows = csv_rows(path);
    assert!(rows.len() >= 3);
    for r in &rows[1..] {
        assert!(num(&r[3]) <= num(&r[1]), "{}: j = {} dist {} > eps {}", path.display(), r[0], r[3], r[1]);
    }
}

#[test]
fn malformed_config_exits_1_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "name": "bad", "problem": { "name": "maxroot", "n": 1 }, "method": "local", "q": 1 "#).unwrap();
    let out = hocp(&["run", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, vec![std::ffi::OsString::from("bad.json")]);
}

#[test]
fn lp_with_quadratic_cuts_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lp.json");
    std::fs::write(
        &cfg,
        r#"{ "name": "lp", "problem": { "name": "maxroot", "n": 2 }, "method": "local",
             "q": 2, "p": 1, "eps1": 0.5, "x1": { "constant": 0.1 }, "strategy": "lp" }"#,
    )
    .unwrap();
    let out = hocp(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lp"));
    assert!(!dir.path().join("lp.csv").exists());
}

#[test]
fn unknown_problem_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("u.json");
    std::fs::write(
        &cfg,
        r#"{ "name": "u", "problem": { "name": "rosenbrock" }, "method": "local",
             "q": 1, "p": 1, "eps1": 0.5, "x1": { "constant": 0.1 } }"#,
    )
    .unwrap();
    assert_eq!(hocp(&["run", cfg.to_str().unwrap()], dir.path()).status.code(), Some(1));
}

#[test]
fn ex61_q2_stays_in_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let out = hocp(&["run", &config("ex61_q2.json")], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_envelope_from_2(&dir.path().join("ex61_q2.csv"));
    let rows = csv_rows(&dir.path().join("ex61_q2.csv"));
    assert!(rows.iter().all(|r| r[4] == "2"), "|W_j| = 2 every iteration");
    // bigfloat columns use 40 significant digits
    assert_eq!(rows[1][1].split('e').next().unwrap().replace(['.', '-'], "").len(), 40);
}

#[test]
fn ex64_accounting_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    for stem in ["a", "b"] {
        let out = hocp(&["run", &config("ex64.json"), "--output", stem], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    let s: Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(s["termination"], "eps_threshold");
    let calls = s["total_oracle_calls"].as_u64().unwrap();
    let evals = s["total_objective_evals"].as_u64().unwrap();
    let iterations = s["iterations"].as_u64().unwrap();
    assert_eq!(evals, calls + 1);
    // one new oracle call per iteration except the last one, whose center was already seen
    let rows = csv_rows(&dir.path().join("a.csv"));
    assert_eq!(rows.len() as u64, iterations);
    let cum: Vec<u64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert_eq!(cum.last().copied(), Some(calls));
    assert!(cum.windows(2).all(|w| w[1] - w[0] <= 1));
    assert!(s["rate"].is_object());
    assert!(s["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn ex61_q_sweep_writes_five_envelope_passing_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = hocp(&["sweep", &config("ex61_sweep.json"), &config("ex61_grid.json")], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for q in 1..=5 {
        assert_envelope_from_2(&dir.path().join(format!("ex61_q-{q}.csv")));
    }
    let s: Value = serde_json::from_slice(&std::fs::read(dir.path().join("ex61_summary.json")).unwrap()).unwrap();
    assert_eq!(s["points"].as_array().unwrap().len(), 5);
    assert_eq!(s["failed"], 0);
}

#[test]
fn remainder_sweep_reports_slopes_near_q_plus_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = hocp(&["sweep", &config("fig1_remainder.json"), &config("fig1_remainder_grid.json")], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("fig1_remainder_summary.json")).unwrap()).unwrap();
    let slopes = s["slopes"].as_array().unwrap();
    assert_eq!(slopes.len(), 3);
    for row in slopes {
        let q = row["q"].as_u64().unwrap() as f64;
        let slope = row["slope"].as_f64().unwrap();
        // halving ε divides the error by 2^{q+1} within a factor 2
        assert!((slope - (q + 1.0)).abs() <= 1.0, "q = {q}: slope {slope}");
    }
}

#[test]
fn empty_grid_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, "{}").unwrap();
    let out = hocp(&["sweep", &config("ex61_sweep.json"), grid.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(&grid, r#"{ "q": [] }"#).unwrap();
    let out = hocp(&["sweep", &config("ex61_sweep.json"), grid.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn sweep_with_an_invalid_point_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    // q = 0 is below p = 1
    std::fs::write(&grid, r#"{ "q": [1, 0] }"#).unwrap();
    let out = hocp(&["sweep", &config("ex61_sweep.json"), grid.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn not_converged_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.json");
    std::fs::write(
        &cfg,
        r#"{ "name": "short", "problem": { "name": "maxroot", "n": 1 }, "method": "local",
             "q": 1, "p": 1, "eps1": 0.5, "eps_thr": "1e-12", "max_iter": 3,
             "x1": { "constant": 0.1 }, "strategy": "exact1d", "init": "singleton" }"#,
    )
    .unwrap();
    let out = hocp(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(csv_rows(&dir.path().join("short.csv")).len(), 3);
}

#[test]
fn list_problems_names_all_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = hocp(&["list-problems"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["maxroot", "sumabs", "maxeig", "halfhalf", "fig1"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

fn verdicts(out: &Output) -> Vec<String> {
    // drop the timing column, keep id, verdict, title and details
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| {
            let words = l.split_whitespace();
            words.filter(|w| !(w.ends_with('s') && w[..w.len() - 1].parse::<f64>().is_ok())).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

#[test]
fn check_is_deterministic_and_catches_a_bad_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let first = hocp(&["check"], dir.path());
    let second = hocp(&["check"], dir.path());
    assert_eq!(verdicts(&first), verdicts(&second));
    let text = String::from_utf8_lossy(&first.stdout);
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ") || l.contains(" FAIL ")).count(), 11);

    let mutated = hocp(&["check", "--mutate-kappa", "1.1"], dir.path());
    assert_ne!(mutated.status.code(), Some(0));
    let text = String::from_utf8_lossy(&mutated.stdout);
    let line = text.lines().find(|l| l.trim_start().starts_with("2 ")).unwrap();
    assert!(line.contains("FAIL"), "{line}");
}

#[test]
fn thread_cap_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hocp"))
        .args(["run", &config("ex61_q1.json")])
        .env("HOCP_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_envelope_from_2(&dir.path().join("ex61_q1.csv"));
}
