//! The local superlinear method and its globalized variant.

use serde::Serialize;
use thiserror::Error;

use crate::bundle_loop::{build_bundle, default_max_inner, BundleError, BundleInit, BundleLoopResult, BundleParams, MemoryStore};
use crate::diagnostics::criticality_measure;
use crate::problems::Problem;
use crate::rng::substream_seed;
use crate::scalar::{sub_vec, to_f64_vec, Scalar};
use crate::schedule::{EpsSchedule, ScheduleError};
use crate::subproblem::{Norm, SolverOptions, Strategy, TrustRegion};
use crate::trace::{RunTrace, Totals, TraceRow};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("start point has dimension {got}, problem has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    EpsThreshold,
    /// Boundary-active step at this iteration (`j ≥ 2`).
    TrustRegionActive(usize),
    MaxIterations,
    SubproblemDegraded,
}

#[derive(Clone, Debug)]
pub struct LocalConfig<S> {
    pub schedule: EpsSchedule<S>,
    pub norm: Norm,
    pub strategy: Strategy,
    pub init: BundleInit,
    pub solver: SolverOptions,
    pub eps_thr: S,
    pub max_iter: usize,
    /// Inner iteration cap; `None` uses the problem's default.
    pub max_inner: Option<usize>,
    /// Stop at the first boundary-active step after the first iteration.
    /// Without it the run continues and activity only shows in the trace.
    pub stop_on_active: bool,
}

#[derive(Clone, Debug)]
pub struct LocalRunResult<S> {
    /// `x¹, x², …` including the point produced by the last iteration.
    pub iterates: Vec<Vec<S>>,
    /// `f` at each iterate.
    pub values: Vec<S>,
    pub trace: RunTrace<S>,
    pub termination: Termination,
    pub totals: Totals,
}

impl<S: Scalar> LocalRunResult<S> {
    pub fn final_point(&self) -> &[S] {
        self.iterates.last().expect("at least the start point")
    }

    pub fn final_value(&self) -> &S {
        self.values.last().expect("at least the start value")
    }

    /// Iterate with the least objective value (first on ties).
    pub fn best(&self) -> (usize, &[S], &S) {
        let mut k = 0;
        for i in 1..self.values.len() {
            if self.values[i] < self.values[k] {
                k = i;
            }
        }
        (k, &self.iterates[k], &self.values[k])
    }
}

fn params_for<S: Scalar>(problem: &dyn Problem<S>, cfg: &LocalConfig<S>, seed: u64) -> BundleParams<S> {
    let max_inner = cfg
        .max_inner
        .unwrap_or_else(|| default_max_inner(problem.meta().selections.finite(), problem.dim()));
    let mut solver = cfg.solver.clone();
    solver.seed = seed;
    BundleParams { q: cfg.schedule.q, sigma: cfg.schedule.sigma.clone(), strategy: cfg.strategy, solver, init: cfg.init, max_inner }
}

fn loop_totals<S>(r: &BundleLoopResult<S>) -> Totals {
    Totals {
        oracle_calls: r.oracle_calls,
        objective_evals: r.objective_evals,
        inner_iterations: r.inner_iterations,
        degraded_solves: r.degraded_solves,
        max_inner_exceeded: usize::from(r.max_inner_exceeded),
        duplicate_centers: usize::from(r.duplicate_center),
    }
}

/// Algorithm 2 from `x1` with the schedule's radii.
pub fn run_local<S: Scalar>(problem: &dyn Problem<S>, x1: &[S], cfg: &LocalConfig<S>) -> Result<LocalRunResult<S>, DriverError> {
    run_local_with_value(problem, x1, None, cfg)
}

/// Like [`run_local`], reusing a known `f(x1)`.
fn run_local_with_value<S: Scalar>(
    problem: &dyn Problem<S>,
    x1: &[S],
    f1: Option<S>,
    cfg: &LocalConfig<S>,
) -> Result<LocalRunResult<S>, DriverError> {
    if x1.len() != problem.dim() {
        return Err(DriverError::DimensionMismatch { expected: problem.dim(), got: x1.len() });
    }
    if !(cfg.eps_thr > S::zero()) {
        return Err(DriverError::Config("ε_thr must be positive".into()));
    }
    let xstar = problem.meta().minimizer;
    let mut totals = Totals::default();
    let f1 = match f1 {
        Some(v) => v,
        None => {
            totals.objective_evals += 1;
            problem.value(x1)
        }
    };
    let mut memory = MemoryStore::new();
    let mut iterates = vec![x1.to_vec()];
    let mut values = vec![f1];
    let mut trace = RunTrace { rows: Vec::new() };
    let mut j = 1;
    let termination = loop {
        let eps = cfg.schedule.eps_at(j);
        if eps <= cfg.eps_thr {
            break Termination::EpsThreshold;
        }
        if j > cfg.max_iter {
            break Termination::MaxIterations;
        }
        let x = iterates.last().unwrap().clone();
        let tr = TrustRegion::new(x.clone(), eps.clone(), cfg.norm);
        let params = params_for(problem, cfg, substream_seed(cfg.solver.seed, j as u64));
        let mem = (cfg.init == BundleInit::MemoryReuse).then_some(&mut memory);
        let res = build_bundle(problem, &tr, &params, mem)?;
        totals += loop_totals(&res);

        trace.rows.push(TraceRow {
            j,
            eps,
            f: values.last().unwrap().clone(),
            dist: xstar.as_ref().map(|s| cfg.norm.measure(&sub_vec(&x, s))),
            bundle_size: res.bundle.len(),
            inner_iters: res.inner_iterations,
            oracle_calls: totals.oracle_calls,
            boundary_active: res.solution.boundary_active,
            gap: res.last_gap().clone(),
            crit: criticality_measure(&res.bundle, &S::from_f64(1e-14)),
        });
        iterates.push(res.solution.z.clone());
        values.push(res.z_value.clone());
        if res.solution.degraded {
            break Termination::SubproblemDegraded;
        }
        if cfg.stop_on_active && res.solution.boundary_active && j >= 2 {
            break Termination::TrustRegionActive(j);
        }
        j += 1;
    };
    Ok(LocalRunResult { iterates, values, trace, termination, totals })
}

/// `(f(x) − f(z̄))/Δ^p` with `z̄` from a bundle loop run at `x` with radius `Δ`.
pub fn decrease_measure<S: Scalar>(problem: &dyn Problem<S>, x: &[S], delta: &S, p: u32, res: &BundleLoopResult<S>) -> S {
    (problem.value(x) - res.z_value.clone()) / delta.powi(p as i32)
}

#[derive(Clone, Debug)]
pub struct GlobalConfig<S> {
    pub delta1: S,
    pub theta_delta: S,
    pub tau1: S,
    pub theta_tau: S,
    pub p: u32,
    pub max_outer: usize,
    /// Descent steps per phase before the local attempt.
    pub max_phase_steps: usize,
    /// Outer iterations allowed per local attempt.
    pub local_budget: usize,
    /// Template for local attempts; its `eps1` is replaced by `Δ_j`.
    pub local: LocalConfig<S>,
}

impl<S: Scalar> GlobalConfig<S> {
    fn validate(&self) -> Result<(), DriverError> {
        let unit = |v: &S| *v > S::zero() && *v < S::one();
        if !(self.delta1 > S::zero() && self.tau1 > S::zero()) {
            return Err(DriverError::Config("Δ₁ and τ₁ must be positive".into()));
        }
        if !(unit(&self.theta_delta) && unit(&self.theta_tau)) {
            return Err(DriverError::Config("shrink factors must lie in (0,1)".into()));
        }
        if self.max_outer == 0 || self.local_budget == 0 {
            return Err(DriverError::Config("caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalStatus {
    Converged,
    NotConverged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseLog {
    pub j: usize,
    pub delta: f64,
    pub tau: f64,
    /// Decrease measure of every bundle step tried in this phase.
    pub lambdas: Vec<f64>,
    pub accepted_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttemptLog {
    pub j: usize,
    pub start: Vec<f64>,
    pub termination: Termination,
    pub iterations: usize,
    pub success: bool,
    pub best_f: f64,
}

#[derive(Clone, Debug)]
pub struct GlobalRunResult<S> {
    pub x: Vec<S>,
    pub f: S,
    pub status: GlobalStatus,
    pub phases: Vec<PhaseLog>,
    pub attempts: Vec<AttemptLog>,
    /// The successful local attempt, if any.
    pub local: Option<LocalRunResult<S>>,
    pub totals: Totals,
}

/// Globalized method: shrinking-radius descent phases, each followed by a
/// local attempt started with `ε₁ = Δ_j`.
pub fn run_global<S: Scalar>(problem: &dyn Problem<S>, x0: &[S], cfg: &GlobalConfig<S>) -> Result<GlobalRunResult<S>, DriverError> {
    cfg.validate()?;
    if x0.len() != problem.dim() {
        return Err(DriverError::DimensionMismatch { expected: problem.dim(), got: x0.len() });
    }
    let tmpl = &cfg.local;
    let mut totals = Totals { objective_evals: 1, ..Totals::default() };
    let mut x = x0.to_vec();
    let mut fx = problem.value(x0);
    let mut phases = Vec::new();
    let mut attempts = Vec::new();
    let mut memory = MemoryStore::new();

    for j in 1..=cfg.max_outer {
        let k = j as i32 - 1;
        let delta = cfg.delta1.clone() * cfg.theta_delta.powi(k);
        let tau = cfg.tau1.clone() * cfg.theta_tau.powi(k);
        let mut log = PhaseLog { j, delta: delta.to_f64(), tau: tau.to_f64(), lambdas: Vec::new(), accepted_steps: 0 };
        for i in 0..cfg.max_phase_steps {
            let tr = TrustRegion::new(x.clone(), delta.clone(), tmpl.norm);
            let seed = substream_seed(tmpl.solver.seed, ((j as u64) << 32) | i as u64);
            let params = params_for(problem, tmpl, seed);
            let mem = (tmpl.init == BundleInit::MemoryReuse).then_some(&mut memory);
            let res = build_bundle(problem, &tr, &params, mem)?;
            totals += loop_totals(&res);
            let lam = (fx.clone() - res.z_value.clone()) / delta.powi(cfg.p as i32);
            log.lambdas.push(lam.to_f64());
            if lam < tau {
                break;
            }
            x = res.solution.z;
            fx = res.z_value;
            log.accepted_steps += 1;
        }
        phases.push(log);

        let mut local = tmpl.clone();
        local.schedule = EpsSchedule::new(delta, tmpl.schedule.kappa.clone(), tmpl.schedule.sigma.clone(), tmpl.schedule.q, tmpl.schedule.p)?;
        local.max_iter = cfg.local_budget;
        local.stop_on_active = true;
        local.solver.seed = substream_seed(tmpl.solver.seed, 0xa77e_0000 + j as u64);
        let run = run_local_with_value(problem, &x, Some(fx.clone()), &local)?;
        totals += run.totals;
        let success = matches!(run.termination, Termination::EpsThreshold | Termination::MaxIterations);
        let (_, bx, bf) = run.best();
        attempts.push(AttemptLog {
            j,
            start: to_f64_vec(&x),
            termination: run.termination,
            iterations: run.trace.rows.len(),
            success,
            best_f: bf.to_f64(),
        });
        if success {
            return Ok(GlobalRunResult {
                x: run.final_point().to_vec(),
                f: run.final_value().clone(),
                status: GlobalStatus::Converged,
                phases,
                attempts,
                local: Some(run),
                totals,
            });
        }
        if *bf < fx {
            x = bx.to_vec();
            fx = bf.clone();
        }
    }
    Ok(GlobalRunResult { x, f: fx, status: GlobalStatus::NotConverged, phases, attempts, local: None, totals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{MaxEig, MaxEigInstance, MaxRoot};

    fn local_cfg(q: usize, eps1: f64, strategy: Strategy, norm: Norm, eps_thr: f64) -> LocalConfig<f64> {
        LocalConfig {
            schedule: EpsSchedule::new(eps1, 0.75, 0.5, q, 1).unwrap(),
            norm,
            strategy,
            init: BundleInit::Singleton,
            solver: SolverOptions::default(),
            eps_thr,
            max_iter: 100,
            max_inner: None,
            stop_on_active: true,
        }
    }

    #[test]
    fn constant_problem_stops_at_threshold() {
        let inst = MaxEigInstance { seed: 0, n: 2, m: 2, a: vec![vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 4], vec![0.0; 4]], reference: None };
        let p = MaxEig::<f64>::new(&inst).unwrap();
        let mut cfg = local_cfg(2, 0.5, Strategy::Smoothed, Norm::Euclidean, 1e-3);
        cfg.schedule = EpsSchedule::new(0.5, 0.75, 0.5, 2, 2).unwrap();
        let r = run_local(&p, &[0.2, 0.1], &cfg).unwrap();
        assert_eq!(r.termination, Termination::EpsThreshold);
        assert!(r.trace.rows.iter().all(|row| row.bundle_size == 1));
    }

    #[test]
    fn maxroot_1d_linear_envelope_and_accounting() {
        let p = MaxRoot::new(1);
        let cfg = local_cfg(1, 0.5, Strategy::Exact1d, Norm::Euclidean, 1e-12);
        let r = run_local(&p, &[0.1], &cfg).unwrap();
        assert_eq!(r.termination, Termination::EpsThreshold);
        for row in &r.trace.rows[1..] {
            assert!(row.dist.unwrap() <= row.eps, "j = {}", row.j);
            assert_eq!(row.bundle_size, 2);
        }
        assert_eq!(r.totals.oracle_calls + 1, r.totals.objective_evals);
        for w in r.trace.rows.windows(2) {
            assert!(w[1].oracle_calls > w[0].oracle_calls);
        }
    }

    #[test]
    fn decrease_measure_on_abs() {
        // maxroot in 1-D near x = 1 behaves like a sharp kink; use the exact
        // 1-D solve at x = 1, Δ = 0.5 and check against the definition
        let p = MaxRoot::new(1);
        let cfg = local_cfg(1, 0.5, Strategy::Exact1d, Norm::Euclidean, 1e-3);
        let tr = TrustRegion::new(vec![1.0], 0.5, Norm::Euclidean);
        let res = build_bundle(&p, &tr, &params_for(&p, &cfg, 0), None).unwrap();
        let lam = decrease_measure(&p, &[1.0], &0.5, 1, &res);
        let expect = (Problem::<f64>::value(&p, &[1.0]) - Problem::<f64>::value(&p, &res.solution.z)) / 0.5;
        assert!((lam - expect).abs() < 1e-15);
        assert!(lam > 0.0);
    }

    #[test]
    fn global_from_far_start() {
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
            local: local_cfg(1, 1.0, Strategy::Lp, Norm::Max, 1e-7),
        };
        let r = run_global(&p, &[5.0, -3.0], &cfg).unwrap();
        assert_eq!(r.status, GlobalStatus::Converged);
        assert!(r.x.iter().all(|v| v.abs() <= 1e-6), "{:?}", r.x);
        assert!(r.attempts.last().unwrap().success);
    }
}
