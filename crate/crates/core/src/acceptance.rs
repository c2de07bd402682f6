//! The acceptance suite: end-to-end experiments and oracle comparisons with
//! pinned tolerances, one pass/fail verdict per criterion.

use std::time::Instant;

use serde::Serialize;

use crate::bundle_loop::BundleInit;
use crate::diagnostics::{cauchy_envelope_violations, envelope_check, min_norm_convex_hull};
use crate::drivers::{run_global, run_local, GlobalConfig, GlobalStatus, LocalConfig, LocalRunResult, Termination};
use crate::linalg::{solve as lin_solve, sym_eigen, Mat};
use crate::model::{model_eval, Bundle, Cut};
use crate::problems::{
    finite_difference_check, generate_maxeig_instance, generate_sumabs_instance, Fig1, HalfHalf, MaxEig, MaxRoot,
    Problem, SumAbs,
};
use crate::rng::Stream;
use crate::scalar::{norm2, sub_vec, BigFloat, Scalar};
use crate::schedule::EpsSchedule;
use crate::subproblem::{solve, Norm, SolverOptions, Strategy, TrustRegion};
use crate::taylor::{SymTensor, TaylorJet};

/// Criteria expected to stay red, with the reason.
pub const KNOWN_RED: [(u8, &str); 1] = [(
    5,
    "the half-and-half run leaves the envelope at j = 8, so the first index of permanent containment is 9",
)];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{:>2} {} {:<44} {:>7.2}s  {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Replace κ in the schedule-arithmetic criterion (mutation testing).
    pub kappa_override: Option<f64>,
}

/// Distances to the minimizer and radii of one finished local run.
struct EnvelopeTrace {
    label: String,
    /// `(x^j − x^J)` norms against `C ε_j` are checked from here on.
    j0: usize,
    violations: Vec<usize>,
}

pub const TITLES: [&str; 11] = [
    "maxroot 1-D envelope, q = 1..5, 512 bits",
    "schedule arithmetic",
    "remainder scaling on the three-branch function",
    "inner-loop bound on maxroot",
    "half-and-half run",
    "sum-abs run",
    "subproblem strategy agreement",
    "min-norm point oracle",
    "derivative correctness",
    "globalized run on maxroot",
    "Cauchy envelope on finished runs",
];

/// Run every criterion in order.
pub fn run_all(opts: &CheckOptions) -> Vec<CriterionResult> {
    let mut traces = Vec::new();
    let mut out = Vec::new();
    for id in 1..=10u8 {
        out.push(timed(id, || run_one(id, opts, &mut traces)));
    }
    out.push(timed(11, || cauchy_verdict(&traces)));
    out
}

/// Run a single criterion; 11 reruns the runs it inspects.
pub fn run_criterion(id: u8, opts: &CheckOptions) -> Option<CriterionResult> {
    if !(1..=11).contains(&id) {
        return None;
    }
    let mut traces = Vec::new();
    if id == 11 {
        return Some(timed(11, || {
            for k in [1, 5, 6] {
                run_one(k, opts, &mut traces);
            }
            cauchy_verdict(&traces)
        }));
    }
    Some(timed(id, || run_one(id, opts, &mut traces)))
}

fn timed(id: u8, f: impl FnOnce() -> (bool, String)) -> CriterionResult {
    let t = Instant::now();
    let (pass, detail) = f();
    CriterionResult { id, title: TITLES[id as usize - 1], pass, detail, seconds: t.elapsed().as_secs_f64() }
}

fn run_one(id: u8, opts: &CheckOptions, traces: &mut Vec<EnvelopeTrace>) -> (bool, String) {
    match id {
        1 => maxroot_1d_envelope(traces),
        2 => schedule_arithmetic(opts.kappa_override),
        3 => remainder_scaling(),
        4 => inner_loop_bound(),
        5 => halfhalf_run(traces),
        6 => sumabs_run(traces),
        7 => strategy_agreement(),
        8 => min_norm_oracle(),
        9 => derivative_correctness(),
        10 => globalized_run(),
        _ => unreachable!(),
    }
}

fn verdict(checks: &[(bool, String)]) -> (bool, String) {
    let pass = checks.iter().all(|c| c.0);
    let detail = checks
        .iter()
        .map(|(ok, s)| if *ok { s.clone() } else { format!("!{s}") })
        .collect::<Vec<_>>()
        .join("; ");
    (pass, detail)
}

fn local_cfg<S: Scalar>(
    eps1: S,
    q: usize,
    p: u32,
    norm: Norm,
    strategy: Strategy,
    init: BundleInit,
    eps_thr: S,
) -> LocalConfig<S> {
    LocalConfig {
        schedule: EpsSchedule::new(eps1, S::from_f64(0.75), S::from_f64(0.5), q, p).expect("valid schedule"),
        norm,
        strategy,
        init,
        solver: SolverOptions::default(),
        eps_thr,
        max_iter: 200,
        max_inner: None,
        stop_on_active: false,
    }
}

/// `dist_j ≤ ε_j` on the recorded rows, i.e. every `j` at which the method
/// still worked with radius `ε_j > ε_thr`.
fn row_envelope<S: Scalar>(r: &LocalRunResult<S>, schedule: &EpsSchedule<S>) -> crate::diagnostics::EnvelopeCheck {
    let rows: Vec<(usize, S)> =
        r.trace.rows.iter().map(|row| (row.j, row.dist.clone().expect("known minimizer"))).collect();
    envelope_check(&rows, schedule)
}

fn record_trace<S: Scalar>(
    traces: &mut Vec<EnvelopeTrace>,
    label: String,
    r: &LocalRunResult<S>,
    schedule: &EpsSchedule<S>,
    norm: Norm,
    j0: usize,
) {
    if r.termination == Termination::EpsThreshold {
        let violations = cauchy_envelope_violations(&r.iterates, schedule, |v| norm.measure(v));
        traces.push(EnvelopeTrace { label, j0, violations });
    }
}

fn maxroot_1d_envelope(traces: &mut Vec<EnvelopeTrace>) -> (bool, String) {
    type B = BigFloat<512>;
    let p = MaxRoot::new(1);
    let mut checks = Vec::new();
    for q in 1..=5 {
        let cfg = local_cfg(
            B::from_f64(0.5),
            q,
            1,
            Norm::Euclidean,
            Strategy::Exact1d,
            BundleInit::Singleton,
            B::parse_decimal("1e-60"),
        );
        let r = match run_local(&p, &[B::from_f64(0.1)], &cfg) {
            Ok(r) => r,
            Err(e) => {
                checks.push((false, format!("q={q}: {e}")));
                continue;
            }
        };
        let env = row_envelope(&r, &cfg.schedule);
        let late: Vec<usize> = env.violations.iter().copied().filter(|&j| j >= 2).collect();
        let sizes_ok = r.trace.rows.iter().all(|row| row.bundle_size == 2);
        let ok = r.termination == Termination::EpsThreshold && late.is_empty() && sizes_ok;
        checks.push((ok, format!("q={q}: {} iters, violations j≥2 {:?}, |W|=2 {}", r.trace.rows.len(), late, sizes_ok)));
        record_trace(traces, format!("maxroot q={q}"), &r, &cfg.schedule, cfg.norm, 2);
    }
    verdict(&checks)
}

fn schedule_arithmetic(kappa_override: Option<f64>) -> (bool, String) {
    let mut rng = Stream::new(0x5c4ed);
    let mut worst_const: f64 = 0.0;
    let mut monotone = true;
    for _ in 0..20 {
        let eps1 = 10f64.powf(rng.uniform_in(-2.0, 1.0));
        let kappa = kappa_override.unwrap_or_else(|| rng.uniform_in(0.05, 0.95));
        let sigma = rng.uniform_in(0.05, 0.95);
        let p = 1 + (rng.uniform() * 2.0) as u32;
        let q = p as usize + (rng.uniform() * 4.0) as usize;
        let s = match EpsSchedule::new(eps1, kappa, sigma, q, p) {
            Ok(s) => s,
            Err(e) => return (false, format!("schedule rejected (ε₁={eps1:.3}, κ={kappa:.3}): {e}")),
        };
        let big_q = s.order();
        let mut consts = Vec::new();
        let mut prev_ratio = f64::INFINITY;
        for j in 1..20 {
            let (a, b) = (s.eps_at(j), s.eps_at(j + 1));
            if !(b > 1e-300) {
                break;
            }
            consts.push(b / a.powf(big_q));
            let ratio = b / a;
            monotone &= ratio < prev_ratio;
            prev_ratio = ratio;
        }
        let c0 = consts[0];
        for c in &consts {
            worst_const = worst_const.max(((c - c0) / c0).abs());
        }
    }
    let ok = worst_const <= 1e-12 && monotone;
    (ok, format!("max relative drift of ε_(j+1)/ε_j^Q {worst_const:.2e}, ratios decreasing {monotone}"))
}

fn remainder_scaling() -> (bool, String) {
    use crate::experiment::{loglog_slope, remainder_error, RemainderParams};
    let p = Fig1::new();
    let params = RemainderParams::default();
    let mut checks = Vec::new();
    for q in 1..=3 {
        let mut pts = Vec::new();
        for eps in [0.2, 0.1, 0.05, 0.025] {
            match remainder_error::<f64>(&p, &[-0.45], &eps, q, &params, 7) {
                Ok(e) => pts.push((eps, e)),
                Err(e) => return (false, format!("q={q}: {e}")),
            }
        }
        let slope = loglog_slope(&pts).unwrap_or(f64::NAN);
        checks.push((slope >= (q + 1) as f64 - 0.3, format!("q={q} slope {slope:.2}")));
    }
    verdict(&checks)
}

fn maxroot_start(n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|i| scale * (i + 1) as f64 / n as f64).collect()
}

/// The bound counts Alg. 1 iterations started from the singleton bundle.
fn inner_loop_bound() -> (bool, String) {
    let mut checks = Vec::new();
    for n in [2, 5, 25] {
        let p = MaxRoot::new(n);
        let cfg = local_cfg(0.5, 1, 1, Norm::Max, Strategy::Lp, BundleInit::Singleton, 1e-7);
        match run_local(&p, &maxroot_start(n, 0.1), &cfg) {
            Ok(r) => {
                // iterations once the radius is small
                let worst = r.trace.rows.iter().filter(|row| row.eps <= 0.1).map(|row| row.inner_iters).max().unwrap_or(0);
                checks.push((worst <= 2 * n, format!("n={n}: max inner {worst} ≤ {}", 2 * n)));
            }
            Err(e) => checks.push((false, format!("n={n}: {e}"))),
        }
    }
    let n = 100;
    let p = MaxRoot::new(n);
    let x1: Vec<f64> = (1..=n).map(|i| 0.001 * i as f64).collect();
    let cfg = local_cfg(0.5, 1, 1, Norm::Max, Strategy::Lp, BundleInit::Singleton, 1e-7);
    match run_local(&p, &x1, &cfg) {
        Ok(r) => {
            let worst = r.trace.rows.iter().map(|row| row.inner_iters).max().unwrap_or(0);
            let f = *r.final_value();
            checks.push((worst <= 2 * n && f <= 1e-6, format!("n=100: max inner {worst}, final f {f:.2e}")));
        }
        Err(e) => checks.push((false, format!("n=100: {e}"))),
    }
    verdict(&checks)
}

/// Oracle calls made by each outer iteration, and whether its center was
/// already an earlier iterate.
fn per_iteration_calls<S: Scalar>(r: &LocalRunResult<S>) -> Vec<(usize, bool)> {
    let mut prev = 0;
    r.trace
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let calls = row.oracle_calls - prev;
            prev = row.oracle_calls;
            let known = r.iterates[..i].contains(&r.iterates[i]);
            (calls, known)
        })
        .collect()
}

fn halfhalf_run(traces: &mut Vec<EnvelopeTrace>) -> (bool, String) {
    let p = HalfHalf::new();
    let cfg = local_cfg(30.0, 2, 2, Norm::Euclidean, Strategy::Smoothed, BundleInit::MemoryReuse, 1e-3);
    let r = match run_local(&p, &[20.08; 8], &cfg) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let j_last = r.iterates.len();
    let last = norm2(r.final_point());
    let eps_last = cfg.schedule.eps_at(j_last);
    let env = row_envelope(&r, &cfg.schedule);
    let j0 = env.j0.unwrap_or(usize::MAX);
    let ascent = r.values.windows(2).any(|w| w[1] > w[0]);
    // a repeated center is served from memory
    let calls = per_iteration_calls(&r);
    let single = calls.iter().all(|&(c, known)| c <= 1 && (known || c == 1));
    record_trace(traces, "half-and-half".into(), &r, &cfg.schedule, cfg.norm, j0);
    verdict(&[
        (r.termination == Termination::EpsThreshold, format!("{:?}", r.termination)),
        (last <= 10.0 * eps_last, format!("‖x^J‖ {last:.2e} vs 10ε_J {:.2e}", 10.0 * eps_last)),
        (j0 <= 8, format!("j₀ = {j0} (violations {:?})", env.violations)),
        (ascent, "non-descent step present".into()),
        (single, format!("calls per iteration {:?}", calls.iter().map(|c| c.0).collect::<Vec<_>>())),
    ])
}

fn sumabs_run(traces: &mut Vec<EnvelopeTrace>) -> (bool, String) {
    let inst = match generate_sumabs_instance(1, 10, 8) {
        Ok(i) => i,
        Err(e) => return (false, e.to_string()),
    };
    let p = match SumAbs::<f64>::new(&inst) {
        Ok(p) => p,
        Err(e) => return (false, e.to_string()),
    };
    let cfg = local_cfg(10.0, 2, 2, Norm::Euclidean, Strategy::Smoothed, BundleInit::MemoryReuse, 1e-3);
    let r = match run_local(&p, &[1.0; 10], &cfg) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let last = norm2(r.final_point());
    let eps_last = cfg.schedule.eps_at(r.iterates.len());
    let env = row_envelope(&r, &cfg.schedule);
    let j0 = env.j0.unwrap_or(usize::MAX);
    let sizes: Vec<usize> = r.trace.rows.iter().map(|row| row.bundle_size).collect();
    let third = sizes.len() / 3;
    let first = sizes[..third.max(1)].iter().max().copied().unwrap_or(0);
    let late = sizes[sizes.len() - third.max(1)..].iter().max().copied().unwrap_or(0);
    record_trace(traces, "sum-abs".into(), &r, &cfg.schedule, cfg.norm, j0);
    verdict(&[
        (r.termination == Termination::EpsThreshold, format!("{:?}", r.termination)),
        (last <= 10.0 * eps_last, format!("‖x^J‖ {last:.2e} vs 10ε_J {:.2e}", 10.0 * eps_last)),
        (j0 <= 8, format!("j₀ = {j0}")),
        (late >= first, format!("max |W| first third {first}, last third {late}")),
    ])
}

fn cut_from(center: Vec<f64>, tensors: Vec<SymTensor<f64>>) -> Cut<f64> {
    let jet = TaylorJet::new(center.clone(), tensors).expect("consistent jet");
    Cut { center, jet, flagged: false }
}

fn strategy_agreement() -> (bool, String) {
    let mut rng = Stream::new(0xa9ee);
    let opts = SolverOptions::default();
    let mut worst_1d: f64 = 0.0;
    for _ in 0..50 {
        let x = rng.uniform_in(-1.0, 1.0);
        let eps = rng.uniform_in(0.1, 1.0);
        let k = 1 + (rng.uniform() * 5.0) as usize;
        let mut cuts = Vec::new();
        for i in 0..k {
            // distinct centers spread over the interval
            let y = x + eps * (-1.0 + 2.0 * (i as f64 + rng.uniform()) / k as f64);
            let c = rng.uniform_in(-1.0, 1.0);
            let g = rng.uniform_in(-2.0, 2.0);
            cuts.push(cut_from(vec![y], vec![SymTensor::constant(c, 1), SymTensor::vector(&[g])]));
        }
        let mut values = Vec::new();
        for (norm, strategy) in [(Norm::Euclidean, Strategy::Exact1d), (Norm::Max, Strategy::Lp), (Norm::Euclidean, Strategy::Smoothed)] {
            let mut w = Bundle::new(TrustRegion::new(vec![x], eps, norm));
            for c in &cuts {
                w.push(c.clone()).expect("cut inside region");
            }
            match solve(&w, strategy, &opts, None) {
                Ok(s) => values.push(model_eval(&w, &s.z).expect("nonempty").0),
                Err(e) => return (false, format!("{}: {e}", strategy.name())),
            }
        }
        worst_1d = worst_1d.max((values[0] - values[1]).abs()).max((values[0] - values[2]).abs());
    }

    let mut worst_q: f64 = 0.0;
    for _ in 0..20 {
        let n = 1 + (rng.uniform() * 3.0) as usize;
        let x: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let eps = rng.uniform_in(0.1, 1.0);
        let m: Vec<f64> = rng.normal_vec(n * n);
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = (0..n).map(|k| m[k * n + i] * m[k * n + j]).sum::<f64>();
            }
            h[i * n + i] += 0.1;
        }
        let g: Vec<f64> = rng.normal_vec(n).iter().map(|v| 2.0 * v).collect();
        let c = rng.uniform_in(-1.0, 1.0);
        let mut w = Bundle::new(TrustRegion::new(x.clone(), eps, Norm::Euclidean));
        w.push(cut_from(x.clone(), vec![SymTensor::constant(c, n), SymTensor::vector(&g), SymTensor::matrix(n, &h)]))
            .expect("center cut");
        let s = match solve(&w, Strategy::Smoothed, &opts, None) {
            Ok(s) => s,
            Err(e) => return (false, e.to_string()),
        };
        let d = trust_region_step(&h, &g, eps);
        let z: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
        let closed = model_eval(&w, &z).expect("nonempty").0;
        let dz = norm2(&sub_vec(&s.z, &z));
        worst_q = worst_q.max((model_eval(&w, &s.z).expect("nonempty").0 - closed).abs()).max(dz);
    }
    let ok = worst_1d <= 1e-6 && worst_q <= 1e-8;
    (ok, format!("1-D bundles max value spread {worst_1d:.1e}; SPD quadratics max deviation {worst_q:.1e}"))
}

/// Minimizer of `gᵀd + ½dᵀHd` over `‖d‖ ≤ ε` for SPD `H`, by eigen-decomposition
/// and bisection on the secular equation.
fn trust_region_step(h: &[f64], g: &[f64], eps: f64) -> Vec<f64> {
    let n = g.len();
    let (vals, vecs) = sym_eigen(&Mat { n, data: h.to_vec() });
    let gt: Vec<f64> = vecs.iter().map(|v| v.iter().zip(g).map(|(a, b)| a * b).sum()).collect();
    let step = |nu: f64| -> Vec<f64> { (0..n).map(|i| -gt[i] / (vals[i] + nu)).collect() };
    let len = |nu: f64| norm2(&step(nu));
    let nu = if len(0.0) <= eps {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while len(hi) > eps {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if len(mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let dt = step(nu);
    (0..n).map(|j| (0..n).map(|i| vecs[i][j] * dt[i]).sum()).collect()
}

/// Exact min-norm point of a hull by enumerating supports: affine minimizer
/// of every subset, kept when its weights are nonnegative.
fn min_norm_by_faces(points: &[Vec<f64>]) -> f64 {
    let k = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let m = idx.len();
        // [G  1; 1ᵀ 0] [w; -t] = [0; 1] with G the Gram matrix of the support
        let mut a = Mat::zeros(m + 1);
        let mut b = vec![0.0; m + 1];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a.set(r, c, points[i].iter().zip(&points[j]).map(|(u, v)| u * v).sum());
            }
            a.set(r, m, 1.0);
            a.set(m, r, 1.0);
        }
        b[m] = 1.0;
        let Some(sol) = lin_solve(&a, &b) else { continue };
        if sol[..m].iter().any(|&w| w < -1e-12) {
            continue;
        }
        let n = points[0].len();
        let v: Vec<f64> = (0..n).map(|d| idx.iter().zip(&sol).map(|(&i, w)| w * points[i][d]).sum()).collect();
        best = best.min(norm2(&v));
    }
    best
}

/// Smallest norm over the simplex grid with about `budget` points.
fn min_norm_by_grid(points: &[Vec<f64>], budget: usize) -> f64 {
    let k = points.len();
    let binom = |a: usize, b: usize| (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1));
    let mut res = 1;
    while k > 1 && binom(res + 1 + k - 1, k - 1) <= budget {
        res += 1;
    }
    let n = points[0].len();
    let mut best = f64::INFINITY;
    let mut counts = vec![0usize; k];
    fn rec(pos: usize, left: usize, counts: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            visit(counts);
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, visit);
        }
    }
    rec(0, res, &mut counts, &mut |cnt| {
        let v: Vec<f64> =
            (0..n).map(|d| cnt.iter().zip(points).map(|(&c, p)| c as f64 / res as f64 * p[d]).sum()).collect();
        best = best.min(norm2(&v));
    });
    best
}

fn min_norm_oracle() -> (bool, String) {
    let mut rng = Stream::new(0x3141);
    let mut worst_exact: f64 = 0.0;
    let mut grid_beaten = 0;
    let mut worst_cert: f64 = f64::INFINITY;
    for _ in 0..100 {
        let n = 1 + (rng.uniform() * 4.0) as usize;
        let k = 1 + (rng.uniform() * 6.0) as usize;
        let shift: Vec<f64> = rng.normal_vec(n).iter().map(|v| 0.5 * v).collect();
        let pts: Vec<Vec<f64>> = (0..k).map(|_| rng.normal_vec(n).iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let (v, w) = min_norm_convex_hull(&pts, &1e-14);
        let nv = norm2(&v);
        let nv2 = nv * nv;
        for g in &pts {
            let vg: f64 = v.iter().zip(g).map(|(a, b)| a * b).sum();
            worst_cert = worst_cert.min(vg - nv2 + 1e-9);
        }
        let wsum: f64 = w.iter().sum();
        if (wsum - 1.0).abs() > 1e-12 || w.iter().any(|&x| x < 0.0) {
            return (false, format!("weights off the simplex: {w:?}"));
        }
        worst_exact = worst_exact.max((nv - min_norm_by_faces(&pts)).abs());
        if min_norm_by_grid(&pts, 10_000) < nv - 1e-12 {
            grid_beaten += 1;
        }
    }
    let ok = worst_exact <= 1e-3 && grid_beaten == 0 && worst_cert >= 0.0;
    (
        ok,
        format!(
            "max |‖v‖ − support enumeration| {worst_exact:.1e}, grid beats result {grid_beaten}×, certificate slack {worst_cert:.1e}"
        ),
    )
}

/// Second differences along `d` at two scales agree when no kink is within reach.
fn smooth_along(problem: &dyn Problem<f64>, x: &[f64], d: &[f64], delta: f64) -> bool {
    let f0 = problem.value(x);
    let d2 = |t: f64| {
        let a: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + t * di).collect();
        let b: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi - t * di).collect();
        (problem.value(&a) - 2.0 * f0 + problem.value(&b)) / (t * t)
    };
    let (c1, c2) = (d2(delta), d2(0.5 * delta));
    (c1 - c2).abs() <= 1e-3 * (1.0 + c1.abs())
}

/// No kink near any point of the finite-difference stencils.
fn stencil_is_smooth(problem: &dyn Problem<f64>, x: &[f64]) -> bool {
    if problem.oracle(x, 1).map(|r| r.flagged).unwrap_or(true) {
        return false;
    }
    let n = x.len();
    let delta = 1e-3;
    let unit = |i: usize| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    for i in 0..n {
        if !smooth_along(problem, x, &unit(i), delta) {
            return false;
        }
        for j in i + 1..n {
            for s in [1.0, -1.0] {
                let d: Vec<f64> = (0..n).map(|k| if k == i { 1.0 } else if k == j { s } else { 0.0 }).collect();
                if !smooth_along(problem, x, &d, delta) {
                    return false;
                }
            }
        }
    }
    true
}

fn derivative_correctness() -> (bool, String) {
    let mut rng = Stream::new(0xfd);
    let sumabs = generate_sumabs_instance(1, 10, 8).and_then(|i| SumAbs::<f64>::new(&i));
    let maxeig = generate_maxeig_instance(1, 5, 4).and_then(|i| MaxEig::<f64>::new(&i));
    let (sumabs, maxeig) = match (sumabs, maxeig) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (false, e.to_string()),
    };
    let problems: Vec<(Box<dyn Problem<f64>>, f64)> = vec![
        (Box::new(MaxRoot::new(3)), 1.0),
        (Box::new(Fig1::new()), 1.5),
        (Box::new(HalfHalf::new()), 3.0),
        (Box::new(sumabs), 1.0),
        (Box::new(maxeig), 1.0),
    ];
    let mut checks = Vec::new();
    for (p, scale) in &problems {
        let n = p.dim();
        let mut worst: f64 = 0.0;
        let mut found = 0;
        let mut tries = 0;
        while found < 10 && tries < 500 {
            tries += 1;
            let x: Vec<f64> = (0..n).map(|_| scale * rng.uniform_in(-1.0, 1.0)).collect();
            if !stencil_is_smooth(p.as_ref(), &x) {
                continue;
            }
            found += 1;
            match finite_difference_check(p.as_ref(), &x, 2, 1e-6) {
                Ok(rep) => worst = worst.max(rep.max_error()),
                Err(e) => return (false, format!("{}: {e}", p.name())),
            }
        }
        checks.push((found == 10 && worst <= 1e-5, format!("{} {:.1e}", p.name(), worst)));
    }
    verdict(&checks)
}

fn globalized_run() -> (bool, String) {
    let p = MaxRoot::new(2);
    let cfg = GlobalConfig {
        delta1: 1.0,
        theta_delta: 0.5,
        tau1: 0.1,
        theta_tau: 0.5,
        p: 1,
        max_outer: 40,
        max_phase_steps: 200,
        local_budget: 60,
        local: local_cfg(1.0, 1, 1, Norm::Max, Strategy::Lp, BundleInit::MemoryReuse, 1e-7),
    };
    match run_global(&p, &[5.0, -3.0], &cfg) {
        Ok(r) => {
            let dist = norm2(&r.x);
            let success = r.attempts.iter().any(|a| a.success);
            verdict(&[
                (r.status == GlobalStatus::Converged, format!("{:?}", r.status)),
                (dist <= 1e-6, format!("final distance {dist:.1e}")),
                (success, format!("{} local attempts", r.attempts.len())),
            ])
        }
        Err(e) => (false, e.to_string()),
    }
}

fn cauchy_verdict(traces: &[EnvelopeTrace]) -> (bool, String) {
    if traces.is_empty() {
        return (false, "no finished runs to inspect".into());
    }
    let checks: Vec<(bool, String)> = traces
        .iter()
        .map(|t| {
            let late: Vec<usize> = t.violations.iter().copied().filter(|&j| j >= t.j0).collect();
            (late.is_empty(), format!("{} from j₀={}: {:?}", t.label, t.j0, late))
        })
        .collect();
    verdict(&checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_enumeration_matches_known_hulls() {
        assert!((min_norm_by_faces(&[vec![1.0, 0.0], vec![0.0, 1.0]]) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(min_norm_by_faces(&[vec![1.0, 0.0], vec![-1.0, 0.0]]) < 1e-14);
        // resolution 9999 misses the midpoint by half a step: error ~ step²
        assert!((min_norm_by_grid(&[vec![1.0, 0.0], vec![0.0, 1.0]], 10_000) - 0.5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn closed_form_trust_region_step() {
        // H = 2I, g = (4, 0): unconstrained step (−2, 0) is clipped to the radius
        let d = trust_region_step(&[2.0, 0.0, 0.0, 2.0], &[4.0, 0.0], 1.0);
        assert!((d[0] + 1.0).abs() < 1e-12 && d[1].abs() < 1e-12);
        let d = trust_region_step(&[2.0, 0.0, 0.0, 2.0], &[1.0, 0.0], 1.0);
        assert!((d[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn mutated_kappa_fails_the_schedule_criterion() {
        let r = run_criterion(2, &CheckOptions { kappa_override: Some(1.1) }).unwrap();
        assert!(!r.pass);
        assert!(run_criterion(2, &CheckOptions::default()).unwrap().pass);
    }

    #[test]
    fn kink_screen_rejects_points_near_kinks() {
        let p = MaxRoot::new(2);
        assert!(!stencil_is_smooth(&p, &[0.3, 0.3 + 1e-5]));
        assert!(stencil_is_smooth(&p, &[0.3, 0.1]));
    }
}
