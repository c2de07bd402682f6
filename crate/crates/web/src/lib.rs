//! Browser demo. Each exported function takes plain numbers and returns a
//! JSON string; the Rust-side `*_data` functions carry the logic so they can
//! be tested natively.

use std::f64::consts::LN_10;

use hocp::bundle_loop::BundleInit;
use hocp::diagnostics::{cauchy_envelope_violations, envelope_check};
use hocp::drivers::{run_local, LocalConfig};
use hocp::model::{model_eval, Bundle, Cut};
use hocp::problems::{Fig1, MaxRoot, Problem};
use hocp::scalar::{BigFloat, Scalar};
use hocp::schedule::EpsSchedule;
use hocp::subproblem::{Norm, SolverOptions, Strategy, TrustRegion};
use serde::Serialize;
use wasm_bindgen::prelude::*;

type B = BigFloat<512>;

const MAX_SAMPLES: usize = 5000;

fn log10<S: Scalar>(v: &S) -> Option<f64> {
    (*v > S::zero()).then(|| v.ln().to_f64() / LN_10)
}

#[derive(Debug, Serialize)]
pub struct ModelCurves {
    pub centers: Vec<f64>,
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub model: Vec<f64>,
    /// `cuts[k][i]`: Taylor expansion at center `k`, sample `i`.
    pub cuts: Vec<Vec<f64>>,
    /// Index of the cut attaining the model at each sample.
    pub active: Vec<usize>,
}

/// The three-branch function, its `q`-th order cutting-plane model for the
/// given centers, and every Taylor expansion, sampled on `[lo, hi]`.
pub fn fig1_data(q: usize, centers: &[f64], lo: f64, hi: f64, samples: usize) -> Result<ModelCurves, String> {
    let problem = Fig1::new();
    let max_q = Problem::<f64>::max_order(&problem);
    if q == 0 || q > max_q {
        return Err(format!("q must lie in 1..={max_q}"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err("need a finite interval with lo < hi".into());
    }
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must lie in 2..={MAX_SAMPLES}"));
    }
    if centers.is_empty() || centers.iter().any(|c| !(lo..=hi).contains(c)) {
        return Err("centers must be nonempty and inside the interval".into());
    }
    let tr = TrustRegion::new(vec![(lo + hi) / 2.0], (hi - lo) / 2.0, Norm::Euclidean);
    let mut w = Bundle::new(tr);
    for &c in centers {
        let resp = problem.oracle(&[c], q).map_err(|e| e.to_string())?;
        w.push(Cut::from_response(resp)).map_err(|e| e.to_string())?;
    }
    let mut out = ModelCurves {
        centers: centers.to_vec(),
        z: Vec::with_capacity(samples),
        f: Vec::with_capacity(samples),
        model: Vec::with_capacity(samples),
        cuts: vec![Vec::with_capacity(samples); centers.len()],
        active: Vec::with_capacity(samples),
    };
    for i in 0..samples {
        let z = [lo + (hi - lo) * i as f64 / (samples - 1) as f64];
        let (m, k) = model_eval(&w, &z).map_err(|e| e.to_string())?;
        out.z.push(z[0]);
        out.f.push(problem.value(&z));
        out.model.push(m);
        out.active.push(k);
        for (col, v) in out.cuts.iter_mut().zip(w.cut_values(&z)) {
            col.push(v);
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct RunRow {
    pub j: usize,
    pub log10_eps: f64,
    /// `None` when the iterate is exactly the minimizer.
    pub log10_dist: Option<f64>,
    pub inside: bool,
    pub bundle_size: usize,
    pub oracle_calls: usize,
}

#[derive(Debug, Serialize)]
pub struct MaxRootRun {
    pub termination: String,
    pub rows: Vec<RunRow>,
    /// First index from which every row stays inside the envelope.
    pub j0: Option<usize>,
    pub cauchy_constant: f64,
    /// Indices with `‖x^j − x^J‖ > C ε_j`.
    pub cauchy_violations: Vec<usize>,
}

/// One-dimensional max-root run in 512-bit arithmetic with the exact
/// interval solver, stopping once `ε_j ≤ 10^(−thr_digits)`.
pub fn maxroot_data(q: usize, x1: f64, eps1: f64, kappa: f64, sigma: f64, thr_digits: u32) -> Result<MaxRootRun, String> {
    let problem = MaxRoot::new(1);
    let max_q = Problem::<B>::max_order(&problem);
    if q == 0 || q > max_q {
        return Err(format!("q must lie in 1..={max_q}"));
    }
    if !(1..=120).contains(&thr_digits) {
        return Err("threshold digits must lie in 1..=120".into());
    }
    if !x1.is_finite() {
        return Err("x1 must be finite".into());
    }
    let schedule = EpsSchedule::new(B::from_f64(eps1), B::from_f64(kappa), B::from_f64(sigma), q, 1)
        .map_err(|e| e.to_string())?;
    let cfg = LocalConfig {
        schedule: schedule.clone(),
        norm: Norm::Euclidean,
        strategy: Strategy::Exact1d,
        init: BundleInit::Singleton,
        solver: SolverOptions { parallel: false, ..SolverOptions::default() },
        eps_thr: B::parse_decimal_str(&format!("1e-{thr_digits}")),
        max_iter: 200,
        max_inner: None,
        stop_on_active: false,
    };
    let r = run_local(&problem, &[B::from_f64(x1)], &cfg).map_err(|e| e.to_string())?;
    let dists: Vec<(usize, B)> = r.trace.rows.iter().map(|row| (row.j, row.dist.clone().expect("known minimizer"))).collect();
    let env = envelope_check(&dists, &schedule);
    let rows = r
        .trace
        .rows
        .iter()
        .zip(&dists)
        .map(|(row, (_, d))| RunRow {
            j: row.j,
            log10_eps: log10(&row.eps).unwrap_or(f64::NEG_INFINITY),
            log10_dist: log10(d),
            inside: *d <= row.eps,
            bundle_size: row.bundle_size,
            oracle_calls: row.oracle_calls,
        })
        .collect();
    let cauchy = cauchy_envelope_violations(&r.iterates[..r.trace.rows.len()], &schedule, |v: &[B]| v[0].abs());
    Ok(MaxRootRun {
        termination: format!("{:?}", r.termination),
        rows,
        j0: env.j0,
        cauchy_constant: schedule.cauchy_constant(),
        cauchy_violations: cauchy,
    })
}

#[derive(Debug, Serialize)]
pub struct ScheduleTable {
    /// `Q = (q + σ)/p`.
    pub order: f64,
    pub cauchy_constant: f64,
    /// `log10 ε_j` for `j = 1..`; computed in log space, so it never underflows.
    pub log10_eps: Vec<f64>,
    /// `log10 ε_j^(q+σ)`, the gap-test thresholds.
    pub log10_gap: Vec<f64>,
    /// First `j` with `ε_j ≤ 10^(−thr_digits)`, if within the table.
    pub j_below_threshold: Option<usize>,
}

pub fn schedule_data(eps1: f64, kappa: f64, sigma: f64, q: usize, p: u32, count: usize, thr_digits: f64) -> Result<ScheduleTable, String> {
    let s = EpsSchedule::new(eps1, kappa, sigma, q, p).map_err(|e| e.to_string())?;
    if !(1..=200).contains(&count) {
        return Err("count must lie in 1..=200".into());
    }
    let big_q = s.order();
    let log_eps: Vec<f64> =
        (1..=count).map(|j| eps1.log10() + (big_q.powi(j as i32 - 1) - 1.0) * kappa.log10()).collect();
    let log_gap = log_eps.iter().map(|l| l * (q as f64 + sigma)).collect();
    let j_below = log_eps.iter().position(|&l| l <= -thr_digits).map(|i| i + 1);
    Ok(ScheduleTable {
        order: big_q,
        cauchy_constant: s.cauchy_constant(),
        log10_eps: log_eps,
        log10_gap: log_gap,
        j_below_threshold: j_below,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn fig1_model(q: usize, centers: &[f64], lo: f64, hi: f64, samples: usize) -> Result<String, JsError> {
    to_js(fig1_data(q, centers, lo, hi, samples))
}

#[wasm_bindgen]
pub fn maxroot_run(q: usize, x1: f64, eps1: f64, kappa: f64, sigma: f64, thr_digits: u32) -> Result<String, JsError> {
    to_js(maxroot_data(q, x1, eps1, kappa, sigma, thr_digits))
}

#[wasm_bindgen]
pub fn schedule_table(eps1: f64, kappa: f64, sigma: f64, q: usize, p: u32, count: usize, thr_digits: f64) -> Result<String, JsError> {
    to_js(schedule_data(eps1, kappa, sigma, q, p, count, thr_digits))
}
