//! Experiment configuration and orchestration: one JSON config describes a
//! problem, a method and a scalar backend; running it yields a CSV trace and
//! a JSON summary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle_loop::BundleInit;
use crate::diagnostics::{estimate_r_order, RateReport};
use crate::drivers::{
    run_global, run_local, AttemptLog, DriverError, GlobalConfig, GlobalStatus, LocalConfig, LocalRunResult, PhaseLog,
    Termination,
};
use crate::model::{model_eval, remainder_probe, Bundle, Cut, ModelError};
use crate::problems::{
    generate_maxeig_instance, generate_sumabs_instance, Fig1, HalfHalf, MaxEig, MaxEigInstance, MaxRoot, Problem,
    ProblemError, SumAbs,
};
use crate::scalar::{to_f64_vec, BigFloat, Scalar};
use crate::schedule::{EpsSchedule, ScheduleError};
use crate::subproblem::{Norm, SolverOptions, Strategy, TrustRegion};
use crate::trace::Totals;

/// Mantissa widths the extended backend can be instantiated with.
pub const BIGFLOAT_BITS: [u32; 6] = [128, 256, 512, 1024, 2048, 8192];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    MaxRoot {
        n: usize,
    },
    Fig1,
    HalfHalf,
    SumAbs {
        seed: u64,
        n: usize,
        m: usize,
    },
    /// Either generated from `(seed, n, m)` or loaded from an instance file
    /// (relative to the config), which may carry a reference minimizer.
    MaxEig {
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        n: usize,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        instance: Option<PathBuf>,
    },
}

impl ProblemSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemSpec::MaxRoot { .. } => "maxroot",
            ProblemSpec::Fig1 => "fig1",
            ProblemSpec::HalfHalf => "halfhalf",
            ProblemSpec::SumAbs { .. } => "sumabs",
            ProblemSpec::MaxEig { .. } => "maxeig",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Local,
    Global,
    /// Sampled model error of a grid-dense bundle around `x1` with radius
    /// `eps1`, for the remainder-scaling study.
    Remainder,
    /// Sampled curves of `f`, the model and each cut on `B̄_eps1(x1)` for
    /// a user-given 1-D bundle.
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Binary64,
    BigFloat(u32),
}

impl Backend {
    pub fn label(&self) -> String {
        match self {
            Backend::Binary64 => "binary64".into(),
            Backend::BigFloat(b) => format!("bigfloat({b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StartPoint {
    /// Every coordinate equal.
    Constant(f64),
    /// `n` equally spaced values from `from` to `to`.
    Linspace { from: f64, to: f64 },
    /// Decimal strings, parsed in the run's backend.
    Values(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalParams {
    pub delta1: f64,
    pub theta_delta: f64,
    #[serde(default = "default_tau1")]
    pub tau1: f64,
    #[serde(default = "default_half")]
    pub theta_tau: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_phase_steps")]
    pub max_phase_steps: usize,
    #[serde(default = "default_local_budget")]
    pub local_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemainderParams {
    /// Bundle centers on a uniform grid over the region.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Bundle centers, inside `B̄_eps1(x1)`.
    pub centers: Vec<f64>,
    #[serde(default = "default_curve_points")]
    pub samples: usize,
}

impl Default for RemainderParams {
    fn default() -> Self {
        RemainderParams { grid: default_grid(), samples: default_samples() }
    }
}

fn default_tau1() -> f64 {
    0.1
}
fn default_half() -> f64 {
    0.5
}
fn default_sigma() -> f64 {
    0.5
}
fn default_kappa() -> f64 {
    0.75
}
fn default_max_outer() -> usize {
    40
}
fn default_phase_steps() -> usize {
    200
}
fn default_local_budget() -> usize {
    60
}
fn default_grid() -> usize {
    41
}
fn default_samples() -> usize {
    2000
}
fn default_curve_points() -> usize {
    601
}
fn default_max_iter() -> usize {
    200
}
fn default_backend() -> Backend {
    Backend::Binary64
}
fn default_init() -> BundleInit {
    BundleInit::MemoryReuse
}
fn default_strategy() -> Strategy {
    Strategy::Auto
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub method: Method,
    pub q: usize,
    pub p: u32,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub eps1: f64,
    /// Decimal string so that thresholds below the binary64 range work.
    #[serde(default)]
    pub eps_thr: Option<String>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub x1: StartPoint,
    /// Defaults to `max` for the LP strategy and `euclidean` otherwise.
    #[serde(default)]
    pub norm: Option<Norm>,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_init")]
    pub init: BundleInit,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub max_inner: Option<usize>,
    #[serde(default)]
    pub stop_on_active: bool,
    #[serde(default)]
    pub global: Option<GlobalParams>,
    #[serde(default)]
    pub remainder: Option<RemainderParams>,
    #[serde(default)]
    pub model: Option<ModelParams>,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    /// Output file stem; `<output>.csv` and `<output>.json`. Relative paths
    /// resolve against the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    pub fn norm(&self) -> Norm {
        self.norm.unwrap_or(if self.strategy == Strategy::Lp { Norm::Max } else { Norm::Euclidean })
    }

    /// Every check that can be made without running.
    pub fn validate(&self, base: &Path) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        EpsSchedule::new(self.eps1, self.kappa, self.sigma, self.q, self.p)?;
        if self.q < self.p as usize && matches!(self.method, Method::Local | Method::Global) {
            return bad(format!("need q ≥ p, got q = {}, p = {}", self.q, self.p));
        }
        if let Backend::BigFloat(bits) = self.backend {
            if !BIGFLOAT_BITS.contains(&bits) {
                return bad(format!("bigfloat bits must be one of {BIGFLOAT_BITS:?}, got {bits}"));
            }
        }
        let (dim, max_order) = self.problem_shape(base)?;
        if self.q > max_order {
            return bad(format!("{} supports q ≤ {max_order}, got {}", self.problem.label(), self.q));
        }
        match self.strategy {
            Strategy::Lp if self.q != 1 => return bad("the lp strategy needs q = 1".into()),
            Strategy::Lp if self.norm() != Norm::Max => return bad("the lp strategy needs the max norm".into()),
            Strategy::Exact1d if dim != 1 => return bad("the exact1d strategy needs n = 1".into()),
            _ => {}
        }
        if let BundleInit::RandomSample(0) = self.init {
            return bad("random_sample needs a positive count".into());
        }
        match &self.x1 {
            StartPoint::Values(v) if v.len() != dim => {
                return bad(format!("x1 has {} entries, problem dimension is {dim}", v.len()));
            }
            StartPoint::Values(v) => {
                for s in v {
                    if s.trim().parse::<f64>().is_err() {
                        return bad(format!("x1 entry {s:?} is not a decimal number"));
                    }
                }
            }
            StartPoint::Constant(c) if !c.is_finite() => return bad("x1 must be finite".into()),
            StartPoint::Linspace { from, to } if !(from.is_finite() && to.is_finite()) => {
                return bad("x1 must be finite".into());
            }
            _ => {}
        }
        match self.method {
            Method::Local | Method::Global => match &self.eps_thr {
                None => return bad("eps_thr is required for local and global runs".into()),
                Some(s) => {
                    // parsed wide so thresholds below the binary64 range stay positive
                    let v = parse_scalar::<BigFloat<128>>(s);
                    if s.trim().parse::<f64>().is_err() || !(v > BigFloat::zero()) {
                        return bad(format!("eps_thr {s:?} must be a positive decimal"));
                    }
                }
            },
            Method::Remainder => {
                if dim != 1 {
                    return bad("the remainder study needs a one-dimensional problem".into());
                }
            }
            Method::Model => {
                if dim != 1 {
                    return bad("model curves need a one-dimensional problem".into());
                }
                let Some(m) = &self.model else { return bad("method model needs a `model` block".into()) };
                let x = self.start::<f64>(1)[0];
                if m.centers.is_empty() || m.centers.iter().any(|c| !((c - x).abs() <= self.eps1)) {
                    return bad(format!("model centers must be nonempty and lie in [{}, {}]", x - self.eps1, x + self.eps1));
                }
                if m.samples < 2 {
                    return bad("model curves need at least 2 samples".into());
                }
            }
        }
        if self.method == Method::Global {
            let Some(g) = &self.global else { return bad("method global needs a `global` block".into()) };
            let unit = |v: f64| v > 0.0 && v < 1.0;
            if !(g.delta1 > 0.0 && g.tau1 > 0.0 && unit(g.theta_delta) && unit(g.theta_tau)) {
                return bad("global: need Δ₁, τ₁ > 0 and shrink factors in (0,1)".into());
            }
            if g.max_outer == 0 || g.local_budget == 0 {
                return bad("global: caps must be positive".into());
            }
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        Ok(())
    }

    fn problem_shape(&self, base: &Path) -> Result<(usize, usize), ConfigError> {
        let p = build_problem::<f64>(&self.problem, base)?;
        Ok((p.dim(), p.max_order()))
    }

    fn start<S: Scalar>(&self, dim: usize) -> Vec<S> {
        match &self.x1 {
            StartPoint::Constant(c) => vec![S::from_f64(*c); dim],
            StartPoint::Linspace { from, to } => (0..dim)
                .map(|i| {
                    let t = if dim == 1 { 0.0 } else { i as f64 / (dim - 1) as f64 };
                    S::from_f64(from + (to - from) * t)
                })
                .collect(),
            StartPoint::Values(v) => v.iter().map(|s| parse_scalar::<S>(s)).collect(),
        }
    }
}

/// Parse a decimal in the backend; binary64 strings round once.
pub fn parse_scalar<S: Scalar>(s: &str) -> S {
    S::parse_decimal_str(s.trim())
}

pub fn load_maxeig_instance(path: &Path) -> Result<MaxEigInstance, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn build_problem<S: Scalar>(spec: &ProblemSpec, base: &Path) -> Result<Box<dyn Problem<S>>, ConfigError> {
    Ok(match spec {
        ProblemSpec::MaxRoot { n } => {
            if *n == 0 {
                return Err(ConfigError::Invalid("maxroot needs n ≥ 1".into()));
            }
            Box::new(MaxRoot::new(*n))
        }
        ProblemSpec::Fig1 => Box::new(Fig1::new()),
        ProblemSpec::HalfHalf => Box::new(HalfHalf::new()),
        ProblemSpec::SumAbs { seed, n, m } => Box::new(SumAbs::<S>::new(&generate_sumabs_instance(*seed, *n, *m)?)?),
        ProblemSpec::MaxEig { seed, n, m, instance } => {
            let inst = match instance {
                Some(path) => {
                    let inst = load_maxeig_instance(&base.join(path))?;
                    if (inst.seed, inst.n, inst.m) != (*seed, *n, *m) {
                        return Err(ConfigError::Invalid(format!(
                            "instance file holds seed {} n {} m {}, config says seed {seed} n {n} m {m}",
                            inst.seed, inst.n, inst.m
                        )));
                    }
                    inst
                }
                None => generate_maxeig_instance(*seed, *n, *m)?,
            };
            Box::new(MaxEig::<S>::new(&inst)?)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlobalSummary {
    pub status: GlobalStatus,
    pub phases: Vec<PhaseLog>,
    pub attempts: Vec<AttemptLog>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderSummary {
    pub q: usize,
    pub eps: f64,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSummary {
    pub q: usize,
    pub cuts: usize,
    /// `max |f − 𝒯^{q,W}|` over the sampled curve.
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub problem: String,
    pub method: Method,
    pub backend: String,
    pub strategy: Strategy,
    pub norm: Norm,
    /// Whether the run reached its goal (ε threshold, or global convergence).
    pub converged: bool,
    pub termination: Option<Termination>,
    pub iterations: usize,
    pub total_oracle_calls: usize,
    pub total_objective_evals: usize,
    pub totals: Totals,
    pub final_f: Option<String>,
    pub final_dist: Option<String>,
    /// The minimizer behind `dist` came from a long run of this library.
    pub reference_is_self_referential: bool,
    pub rate: Option<RateReport>,
    pub global: Option<GlobalSummary>,
    pub remainder: Option<RemainderSummary>,
    pub model: Option<ModelSummary>,
    pub wall_time_s: f64,
}

impl RunSummary {
    /// Process exit code: 0 when the run reached its goal, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            2
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub csv: String,
    pub summary: RunSummary,
    /// Final iterate in binary64, for callers that post-process.
    pub final_point: Vec<f64>,
}

/// Validate, then run in the configured backend.
pub fn run_config(cfg: &RunConfig, base: &Path) -> Result<RunOutput, ExperimentError> {
    cfg.validate(base)?;
    match cfg.backend {
        Backend::Binary64 => run_typed::<f64>(cfg, base),
        Backend::BigFloat(128) => run_typed::<BigFloat<128>>(cfg, base),
        Backend::BigFloat(256) => run_typed::<BigFloat<256>>(cfg, base),
        Backend::BigFloat(512) => run_typed::<BigFloat<512>>(cfg, base),
        Backend::BigFloat(1024) => run_typed::<BigFloat<1024>>(cfg, base),
        Backend::BigFloat(2048) => run_typed::<BigFloat<2048>>(cfg, base),
        Backend::BigFloat(8192) => run_typed::<BigFloat<8192>>(cfg, base),
        Backend::BigFloat(b) => Err(ConfigError::Invalid(format!("unsupported bigfloat width {b}")).into()),
    }
}

pub fn local_config<S: Scalar>(cfg: &RunConfig) -> Result<LocalConfig<S>, ConfigError> {
    let schedule =
        EpsSchedule::new(S::from_f64(cfg.eps1), S::from_f64(cfg.kappa), S::from_f64(cfg.sigma), cfg.q, cfg.p)?;
    let eps_thr = cfg.eps_thr.as_deref().map(parse_scalar::<S>).unwrap_or_else(|| S::from_f64(1e-3));
    Ok(LocalConfig {
        schedule,
        norm: cfg.norm(),
        strategy: cfg.strategy,
        init: cfg.init,
        solver: cfg.solver.clone(),
        eps_thr,
        max_iter: cfg.max_iter,
        max_inner: cfg.max_inner,
        stop_on_active: cfg.stop_on_active,
    })
}

fn run_typed<S: Scalar>(cfg: &RunConfig, base: &Path) -> Result<RunOutput, ExperimentError> {
    let started = Instant::now();
    let problem = build_problem::<S>(&cfg.problem, base)?;
    let x1 = cfg.start::<S>(problem.dim());
    let meta = problem.meta();
    let mut summary = RunSummary {
        name: cfg.name.clone(),
        problem: problem.name(),
        method: cfg.method,
        backend: S::backend_name(),
        strategy: cfg.strategy,
        norm: cfg.norm(),
        converged: false,
        termination: None,
        iterations: 0,
        total_oracle_calls: 0,
        total_objective_evals: 0,
        totals: Totals::default(),
        final_f: None,
        final_dist: None,
        reference_is_self_referential: meta.minimizer_is_self_referential,
        rate: None,
        global: None,
        remainder: None,
        model: None,
        wall_time_s: 0.0,
    };
    let local = local_config::<S>(cfg)?;
    let (csv, final_point) = match cfg.method {
        Method::Remainder => {
            let params = cfg.remainder.clone().unwrap_or_default();
            let eps = S::from_f64(cfg.eps1);
            let err = remainder_error(problem.as_ref(), &x1, &eps, cfg.q, &params, cfg.solver.seed)?;
            summary.converged = true;
            summary.remainder = Some(RemainderSummary { q: cfg.q, eps: cfg.eps1, max_error: err.to_f64() });
            (format!("q,eps,max_error\n{},{},{}\n", cfg.q, eps.to_trace_string(), err.to_trace_string()), to_f64_vec(&x1))
        }
        Method::Model => {
            let params = cfg.model.as_ref().expect("validated");
            let (csv, max_error) = model_curves(problem.as_ref(), &x1[0], &S::from_f64(cfg.eps1), cfg.q, params)?;
            summary.converged = true;
            summary.model = Some(ModelSummary { q: cfg.q, cuts: params.centers.len(), max_error });
            (csv, to_f64_vec(&x1))
        }
        Method::Local => {
            let r = run_local(problem.as_ref(), &x1, &local)?;
            summary.converged = r.termination == Termination::EpsThreshold;
            summary.termination = Some(r.termination);
            fill_from_local(&mut summary, &r, &local.schedule, meta.minimizer.as_deref(), cfg.norm());
            (r.trace.to_csv(), to_f64_vec(r.final_point()))
        }
        Method::Global => {
            let g = cfg.global.as_ref().expect("validated");
            let gcfg = GlobalConfig {
                delta1: S::from_f64(g.delta1),
                theta_delta: S::from_f64(g.theta_delta),
                tau1: S::from_f64(g.tau1),
                theta_tau: S::from_f64(g.theta_tau),
                p: cfg.p,
                max_outer: g.max_outer,
                max_phase_steps: g.max_phase_steps,
                local_budget: g.local_budget,
                local: local.clone(),
            };
            let r = run_global(problem.as_ref(), &x1, &gcfg)?;
            summary.converged = r.status == GlobalStatus::Converged;
            summary.totals = r.totals.clone();
            summary.total_oracle_calls = r.totals.oracle_calls;
            summary.total_objective_evals = r.totals.objective_evals;
            summary.final_f = Some(r.f.to_trace_string());
            summary.final_dist = meta.minimizer.as_deref().map(|s| cfg.norm().measure(&crate::scalar::sub_vec(&r.x, s)).to_trace_string());
            let csv = match &r.local {
                Some(l) => {
                    let mut sched = local.schedule.clone();
                    sched.eps1 = l.trace.rows.first().map(|row| row.eps.clone()).unwrap_or(sched.eps1);
                    summary.termination = Some(l.termination);
                    summary.iterations = l.trace.rows.len();
                    summary.rate = rate_of(l, &sched);
                    l.trace.to_csv()
                }
                None => crate::trace::RunTrace::<S> { rows: Vec::new() }.to_csv(),
            };
            summary.global = Some(GlobalSummary { status: r.status, phases: r.phases, attempts: r.attempts });
            (csv, to_f64_vec(&r.x))
        }
    };
    summary.wall_time_s = started.elapsed().as_secs_f64();
    Ok(RunOutput { csv, summary, final_point })
}

fn rate_of<S: Scalar>(r: &LocalRunResult<S>, schedule: &EpsSchedule<S>) -> Option<RateReport> {
    let d: Option<Vec<S>> = r.trace.rows.iter().map(|row| row.dist.clone()).collect();
    estimate_r_order(&d?, schedule).ok()
}

fn fill_from_local<S: Scalar>(
    summary: &mut RunSummary,
    r: &LocalRunResult<S>,
    schedule: &EpsSchedule<S>,
    minimizer: Option<&[S]>,
    norm: Norm,
) {
    summary.iterations = r.trace.rows.len();
    summary.totals = r.totals.clone();
    summary.total_oracle_calls = r.totals.oracle_calls;
    summary.total_objective_evals = r.totals.objective_evals;
    summary.final_f = Some(r.final_value().to_trace_string());
    summary.final_dist = minimizer.map(|s| norm.measure(&crate::scalar::sub_vec(r.final_point(), s)).to_trace_string());
    summary.rate = rate_of(r, schedule);
}

/// `max |f − 𝒯^{q,W}|` sampled over `B̄_ε(x)` for a bundle whose centers form
/// a uniform grid of the interval (one-dimensional problems).
pub fn remainder_error<S: Scalar>(
    problem: &dyn Problem<S>,
    x: &[S],
    eps: &S,
    q: usize,
    params: &RemainderParams,
    seed: u64,
) -> Result<S, ExperimentError> {
    let tr = TrustRegion::new(x.to_vec(), eps.clone(), Norm::Euclidean);
    let mut w = Bundle::new(tr);
    let g = params.grid.max(2);
    for k in 0..g {
        let t = S::from_f64(-1.0 + 2.0 * k as f64 / (g - 1) as f64);
        let y = vec![x[0].clone() + eps.clone() * t];
        let resp = problem.oracle(&y, q).map_err(ConfigError::from)?;
        w.push(Cut::from_response(resp))?;
    }
    Ok(remainder_probe(problem, &w, params.samples, seed)?)
}

/// CSV `z,f,model,cut_1,..` on a uniform grid of `[x − ε, x + ε]`, and the
/// largest sampled `|f − 𝒯^{q,W}|`.
pub fn model_curves<S: Scalar>(
    problem: &dyn Problem<S>,
    x: &S,
    eps: &S,
    q: usize,
    params: &ModelParams,
) -> Result<(String, f64), ExperimentError> {
    let tr = TrustRegion::new(vec![x.clone()], eps.clone(), Norm::Euclidean);
    let mut w = Bundle::new(tr);
    for &c in &params.centers {
        let resp = problem.oracle(&[S::from_f64(c)], q).map_err(ConfigError::from)?;
        w.push(Cut::from_response(resp))?;
    }
    let mut csv = String::from("z,f,model");
    for k in 1..=w.len() {
        csv += &format!(",cut_{k}");
    }
    csv.push('\n');
    let lo = x.clone() - eps.clone();
    let span = eps.clone() * S::from_f64(2.0);
    let mut worst = 0.0f64;
    for k in 0..params.samples {
        let z = [lo.clone() + span.clone() * S::from_f64(k as f64 / (params.samples - 1) as f64)];
        let f = problem.value(&z);
        let (m, _) = model_eval(&w, &z)?;
        worst = worst.max((f.clone() - m.clone()).abs().to_f64());
        let mut line = format!("{},{},{}", z[0].to_trace_string(), f.to_trace_string(), m.to_trace_string());
        for v in w.cut_values(&z) {
            line += &format!(",{}", v.to_trace_string());
        }
        csv += &line;
        csv.push('\n');
    }
    Ok((csv, worst))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
