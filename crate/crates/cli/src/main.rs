use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use hocp::acceptance::{run_all, CheckOptions, KNOWN_RED};
use hocp::experiment::{loglog_slope, run_config, ExperimentError, Method, RunConfig, RunOutput};
use hocp::problems::PROBLEM_NAMES;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

const EXIT_CONFIG: u8 = 1;
const EXIT_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "hocp", version, about = "Higher-order cutting-plane experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment; writes `<stem>.csv` and `<stem>.json`.
    Run {
        config: PathBuf,
        /// Output stem, overriding the config's `output` (default: the config name).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a template once per point of a parameter grid.
    Sweep {
        template: PathBuf,
        /// JSON object mapping config keys (dotted for nested ones) to value lists.
        grid: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance suite and print one line per criterion.
    Check {
        /// Replace κ in the schedule criterion (mutation test).
        #[arg(long, hide = true)]
        mutate_kappa: Option<f64>,
    },
    /// List the built-in problems.
    ListProblems,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("HOCP_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        // fails only if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let code = match cli.cmd {
        Cmd::Run { config, output } => cmd_run(&config, output),
        Cmd::Sweep { template, grid, output } => cmd_sweep(&template, &grid, output),
        Cmd::Check { mutate_kappa } => cmd_check(mutate_kappa),
        Cmd::ListProblems => {
            for (name, what) in PROBLEM_NAMES {
                println!("{name:<10} {what}");
            }
            0
        }
    };
    ExitCode::from(code)
}

fn stem_for(cli: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    cli.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from(&cfg.name))
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_outputs(stem: &Path, out: &RunOutput) -> anyhow::Result<()> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let csv = with_ext(stem, "csv");
    std::fs::write(&csv, &out.csv).with_context(|| format!("writing {}", csv.display()))?;
    let json = with_ext(stem, "json");
    let text = serde_json::to_string_pretty(&out.summary)?;
    std::fs::write(&json, text + "\n").with_context(|| format!("writing {}", json.display()))?;
    Ok(())
}

fn report(out: &RunOutput) -> String {
    let s = &out.summary;
    if let Some(r) = &s.remainder {
        return format!("{}: q {}, max remainder {:e} at ε {:e}", s.name, r.q, r.max_error, r.eps);
    }
    if let Some(m) = &s.model {
        return format!("{}: q {}, {} cuts, max |f − model| {:e} on the sampled curve", s.name, m.q, m.cuts, m.max_error);
    }
    let status = match (&s.termination, &s.global) {
        (_, Some(g)) => format!("{:?}", g.status),
        (Some(t), None) => format!("{t:?}"),
        (None, None) => "no iterations".into(),
    };
    let mut line = format!("{}: {status}, {} iterations, {} oracle calls", s.name, s.iterations, s.total_oracle_calls);
    if let Some(f) = &s.final_f {
        line += &format!(", f {f}");
    }
    line
}

fn cmd_run(path: &Path, output: Option<PathBuf>) -> u8 {
    let (cfg, base) = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = match run_config(&cfg, &base) {
        Ok(o) => o,
        Err(ExperimentError::Config(e)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            return EXIT_FAILED;
        }
    };
    let stem = stem_for(output, &cfg);
    if let Err(e) = write_outputs(&stem, &out) {
        eprintln!("error: {e:#}");
        return EXIT_FAILED;
    }
    println!("{}", report(&out));
    out.summary.exit_code() as u8
}

/// Set `key` (dotted path) in a JSON object, creating intermediate objects.
fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), String> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| format!("`{key}`: `{part}` is not inside an object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split yields at least one part")
}

fn label_value(v: &Value) -> String {
    let raw = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// Cartesian product of the grid, in key order, last key fastest.
fn grid_points(grid: &BTreeMap<String, Vec<Value>>) -> Vec<Vec<(String, Value)>> {
    let mut points = vec![Vec::new()];
    for (key, values) in grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

struct Point {
    params: Vec<(String, Value)>,
    cfg: RunConfig,
    stem: PathBuf,
}

fn load_grid(path: &Path) -> Result<BTreeMap<String, Vec<Value>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let grid: BTreeMap<String, Vec<Value>> =
        serde_json::from_str(&text).map_err(|e| format!("malformed grid: {e}"))?;
    if grid.is_empty() || grid.values().any(Vec::is_empty) {
        return Err("grid is empty".into());
    }
    Ok(grid)
}

fn prepare_sweep(template: &Path, grid: &Path, output: Option<PathBuf>) -> Result<(Vec<Point>, PathBuf, PathBuf), String> {
    let text = std::fs::read_to_string(template).map_err(|e| format!("cannot read {}: {e}", template.display()))?;
    let base_value: Value = serde_json::from_str(&text).map_err(|e| format!("malformed template: {e}"))?;
    let base_cfg = RunConfig::from_json(&text).map_err(|e| e.to_string())?;
    let base_dir = template.parent().map(Path::to_path_buf).unwrap_or_default();
    let grid = load_grid(grid)?;
    let stem = stem_for(output, &base_cfg);
    let mut points = Vec::new();
    for params in grid_points(&grid) {
        let mut v = base_value.clone();
        let suffix: Vec<String> = params
            .iter()
            .map(|(k, val)| format!("{}-{}", k.rsplit('.').next().unwrap_or(k), label_value(val)))
            .collect();
        let suffix = suffix.join("_");
        for (k, val) in &params {
            set_path(&mut v, k, val.clone())?;
        }
        set_path(&mut v, "name", Value::String(format!("{}_{suffix}", base_cfg.name)))?;
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| format!("point {suffix}: {e}"))?;
        cfg.validate(&base_dir).map_err(|e| format!("point {suffix}: {e}"))?;
        let mut point_stem = stem.as_os_str().to_owned();
        point_stem.push(format!("_{suffix}"));
        points.push(Point { params, cfg, stem: PathBuf::from(point_stem) });
    }
    Ok((points, stem, base_dir))
}

fn cmd_sweep(template: &Path, grid: &Path, output: Option<PathBuf>) -> u8 {
    let (points, stem, base_dir) = match prepare_sweep(template, grid, output) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let results: Vec<Result<RunOutput, String>> = points
        .par_iter()
        .map(|p| {
            let out = run_config(&p.cfg, &base_dir).map_err(|e| e.to_string())?;
            write_outputs(&p.stem, &out).map_err(|e| format!("{e:#}"))?;
            Ok(out)
        })
        .collect();

    let mut failed = 0;
    let mut entries = Vec::new();
    let mut remainder: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (p, r) in points.iter().zip(&results) {
        let params: Map<String, Value> = p.params.iter().cloned().collect();
        match r {
            Ok(out) => {
                println!("{}", report(out));
                if !out.summary.converged {
                    failed += 1;
                }
                if let Some(rem) = &out.summary.remainder {
                    remainder.entry(rem.q).or_default().push((rem.eps, rem.max_error));
                }
                entries.push(json!({
                    "params": params,
                    "csv": with_ext(&p.stem, "csv"),
                    "summary": out.summary,
                }));
            }
            Err(e) => {
                eprintln!("{}: failed: {e}", p.cfg.name);
                failed += 1;
                entries.push(json!({ "params": params, "error": e }));
            }
        }
    }
    let mut summary = json!({ "template": template, "points": entries, "failed": failed });
    if points.iter().any(|p| p.cfg.method == Method::Remainder) {
        println!("{:>3} {:>8} {:>7}", "q", "slope", "points");
        let mut table = Vec::new();
        for (q, pts) in &remainder {
            let slope = loglog_slope(pts);
            let shown = slope.map(|s| format!("{s:.3}")).unwrap_or_else(|| "n/a".into());
            println!("{q:>3} {shown:>8} {:>7}", pts.len());
            table.push(json!({ "q": q, "slope": slope, "points": pts.len() }));
        }
        summary["slopes"] = Value::Array(table);
    }
    let mut path = stem.into_os_string();
    path.push("_summary.json");
    let path = PathBuf::from(path);
    let text = serde_json::to_string_pretty(&summary).expect("plain JSON values");
    if let Err(e) = std::fs::write(&path, text + "\n") {
        eprintln!("error: writing {}: {e}", path.display());
        return EXIT_FAILED;
    }
    if failed > 0 {
        EXIT_FAILED
    } else {
        0
    }
}

fn cmd_check(mutate_kappa: Option<f64>) -> u8 {
    let results = run_all(&CheckOptions { kappa_override: mutate_kappa });
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    for (id, why) in KNOWN_RED {
        if failed.contains(&id) {
            println!("known red {id}: {why}");
        }
    }
    println!("{} of {} criteria pass", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        0
    } else {
        EXIT_FAILED
    }
}
