//! Enrich the bundle until `f(z̄) − 𝒯^{q,W}(z̄) ≤ ε^{q+σ}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Bundle, Cut, ModelError, REGION_SLACK};
use crate::problems::{Problem, ProblemError};
use crate::rng::{substream_seed, Stream};
use crate::scalar::Scalar;
use crate::subproblem::{solve, ColumnId, Norm, SolverOptions, Strategy, SubproblemError, SubproblemSolution, TrustRegion};

#[derive(Debug, Error)]
pub enum BundleError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleInit {
    /// Only the jet at the trust-region center.
    Singleton,
    /// The center plus every remembered oracle point inside the region.
    MemoryReuse,
    /// The center plus this many uniform samples from the region.
    RandomSample(usize),
}

/// Oracle points seen so far, keyed by exact coordinates.
#[derive(Clone, Debug, Default)]
pub struct MemoryStore<S> {
    cuts: Vec<Cut<S>>,
}

impl<S: Scalar> MemoryStore<S> {
    pub fn new() -> Self {
        MemoryStore { cuts: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn insert(&mut self, cut: Cut<S>) {
        if !self.cuts.iter().any(|c| c.center == cut.center) {
            self.cuts.push(cut);
        }
    }

    pub fn get(&self, center: &[S]) -> Option<&Cut<S>> {
        self.cuts.iter().find(|c| c.center == center)
    }

    pub fn cuts(&self) -> &[Cut<S>] {
        &self.cuts
    }
}

/// Remembered cuts whose centers lie in `tr`, first occurrence per center.
pub fn memory_filter<S: Scalar>(memory: &MemoryStore<S>, tr: &TrustRegion<S>) -> Vec<Cut<S>> {
    let mut out: Vec<Cut<S>> = Vec::new();
    for c in memory.cuts() {
        if tr.contains(&c.center, REGION_SLACK) && !out.iter().any(|o| o.center == c.center) {
            out.push(c.clone());
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct BundleParams<S> {
    pub q: usize,
    pub sigma: S,
    pub strategy: Strategy,
    pub solver: SolverOptions,
    pub init: BundleInit,
    pub max_inner: usize,
}

/// `10·|S|` for a finite selection count, else `50 + 10n`.
pub fn default_max_inner(selections: Option<usize>, n: usize) -> usize {
    match selections {
        Some(s) => 10 * s.max(1),
        None => 50 + 10 * n,
    }
}

#[derive(Clone, Debug)]
pub struct BundleLoopResult<S> {
    pub bundle: Bundle<S>,
    pub solution: SubproblemSolution<S>,
    /// `f(z̄)` from the final gap test.
    pub z_value: S,
    /// Cuts appended after a failed gap test.
    pub inner_iterations: usize,
    /// Jet evaluations made here, including initialization.
    pub oracle_calls: usize,
    pub objective_evals: usize,
    pub gap_history: Vec<S>,
    pub theta_history: Vec<S>,
    pub max_inner_exceeded: bool,
    pub duplicate_center: bool,
    pub degraded_solves: usize,
}

impl<S: Scalar> BundleLoopResult<S> {
    pub fn last_gap(&self) -> &S {
        self.gap_history.last().expect("at least one gap test")
    }
}

/// Jet at `z`, from memory when already known at order ≥ `q`.
fn request<S: Scalar>(
    problem: &dyn Problem<S>,
    q: usize,
    z: &[S],
    memory: &mut Option<&mut MemoryStore<S>>,
    calls: &mut usize,
) -> Result<Cut<S>, BundleError> {
    if let Some(m) = memory.as_deref() {
        if let Some(c) = m.get(z) {
            if c.jet.degree() >= q {
                return Ok(Cut { center: c.center.clone(), jet: c.jet.truncate(q), flagged: c.flagged });
            }
        }
    }
    let cut = Cut::from_response(problem.oracle(z, q)?);
    *calls += 1;
    if let Some(m) = memory.as_deref_mut() {
        m.insert(cut.clone());
    }
    Ok(cut)
}

/// Algorithm 1 at the center of `tr`.
pub fn build_bundle<S: Scalar>(
    problem: &dyn Problem<S>,
    tr: &TrustRegion<S>,
    params: &BundleParams<S>,
    mut memory: Option<&mut MemoryStore<S>>,
) -> Result<BundleLoopResult<S>, BundleError> {
    let x = tr.center.clone();
    let eps = tr.radius.clone();
    let threshold = eps.powf(&(S::from_usize(params.q) + params.sigma.clone()));
    let mut bundle = Bundle::new(tr.clone());
    let mut oracle_calls = 0;

    bundle.push(request(problem, params.q, &x, &mut memory, &mut oracle_calls)?)?;
    match params.init {
        BundleInit::Singleton => {}
        BundleInit::MemoryReuse => {
            if let Some(m) = memory.as_deref() {
                for c in memory_filter(m, tr) {
                    if bundle.find_center(&c.center).is_none() {
                        bundle.push(Cut { center: c.center.clone(), jet: c.jet.truncate(params.q), flagged: c.flagged })?;
                    }
                }
            }
        }
        BundleInit::RandomSample(count) => {
            let mut rng = Stream::new(substream_seed(params.solver.seed, 0x5eed));
            for _ in 0..count {
                let u = match tr.norm {
                    Norm::Euclidean => rng.unit_ball(x.len()),
                    Norm::Max => rng.unit_box(x.len()),
                };
                let z: Vec<S> = x.iter().zip(&u).map(|(c, ui)| c.clone() + eps.clone() * S::from_f64(*ui)).collect();
                if bundle.find_center(&z).is_none() {
                    let cut = request(problem, params.q, &z, &mut memory, &mut oracle_calls)?;
                    bundle.push(cut)?;
                }
            }
        }
    }

    let mut gap_history = Vec::new();
    let mut theta_history = Vec::new();
    let mut objective_evals = 0;
    let mut inner = 0;
    let mut degraded_solves = 0;
    let mut warm: Option<Vec<ColumnId>> = None;
    let mut solve_count = 0u64;
    loop {
        let mut opts = params.solver.clone();
        opts.seed = substream_seed(params.solver.seed, solve_count);
        solve_count += 1;
        let sol = solve(&bundle, params.strategy, &opts, warm.as_deref())?;
        if sol.degraded {
            degraded_solves += 1;
        }

        let dup = bundle.find_center(&sol.z);
        let fz = match dup {
            Some(k) if bundle.cuts()[k].center == sol.z => bundle.cuts()[k].jet.value(),
            _ => {
                objective_evals += 1;
                problem.value(&sol.z)
            }
        };
        let gap = fz.clone() - sol.theta.clone();
        gap_history.push(gap.clone());
        theta_history.push(sol.theta.clone());

        let done = gap <= threshold;
        let stalled = !done && dup.is_some();
        let capped = !done && !stalled && inner >= params.max_inner;
        if done || stalled || capped {
            return Ok(BundleLoopResult {
                bundle,
                solution: sol,
                z_value: fz,
                inner_iterations: inner,
                oracle_calls,
                objective_evals,
                gap_history,
                theta_history,
                max_inner_exceeded: capped,
                duplicate_center: stalled,
                degraded_solves,
            });
        }

        let cut = request(problem, params.q, &sol.z, &mut memory, &mut oracle_calls)?;
        bundle.push(cut)?;
        inner += 1;
        warm = sol.lp_basis;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{MaxEig, MaxEigInstance, MaxRoot};

    fn params(q: usize, strategy: Strategy, init: BundleInit, max_inner: usize) -> BundleParams<f64> {
        BundleParams { q, sigma: 0.5, strategy, solver: SolverOptions::default(), init, max_inner }
    }

    #[test]
    fn constant_problem_needs_one_iteration() {
        let inst = MaxEigInstance { seed: 0, n: 2, m: 2, a: vec![vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 4], vec![0.0; 4]], reference: None };
        let p = MaxEig::<f64>::new(&inst).unwrap();
        let tr = TrustRegion::new(vec![0.3, -0.2], 1.0, Norm::Euclidean);
        let r = build_bundle(&p, &tr, &params(2, Strategy::Smoothed, BundleInit::Singleton, 10), None).unwrap();
        assert_eq!(r.inner_iterations, 0);
        assert_eq!(r.gap_history.len(), 1);
        assert!(r.last_gap().abs() < 1e-12);
    }

    #[test]
    fn maxroot_first_outer_iteration_adds_left_endpoint() {
        let p = MaxRoot::new(1);
        let tr = TrustRegion::new(vec![0.1], 0.5, Norm::Euclidean);
        let r = build_bundle(&p, &tr, &params(1, Strategy::Exact1d, BundleInit::Singleton, 20), None).unwrap();
        assert!((r.gap_history[0] - 0.6372).abs() < 1e-4);
        assert!(r.gap_history[0] > 0.5f64.powf(1.5));
        assert!((r.bundle.cuts()[1].center[0] + 0.4).abs() < 1e-12);
        assert_eq!(r.bundle.len(), 2);
        assert!(*r.last_gap() <= 0.5f64.powf(1.5));
        assert_eq!(r.oracle_calls, r.inner_iterations + 1);
        assert_eq!(r.objective_evals, r.gap_history.len());
    }

    #[test]
    fn theta_is_monotone_and_centers_interpolate() {
        let p = MaxRoot::new(3);
        let tr = TrustRegion::new(vec![0.01, -0.02, 0.015], 0.05, Norm::Max);
        let r = build_bundle(&p, &tr, &params(1, Strategy::Lp, BundleInit::Singleton, 60), None).unwrap();
        for w in r.theta_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-14);
        }
        for c in r.bundle.cuts() {
            assert!(crate::model::model_gap(&p, &r.bundle, &c.center).unwrap() <= 1e-12);
        }
        assert!(r.inner_iterations <= 6);
    }

    #[test]
    fn memory_filter_keeps_points_inside() {
        let p = MaxRoot::new(1);
        let mut mem = MemoryStore::new();
        assert!(memory_filter(&mem, &TrustRegion::new(vec![0.0], 1.0, Norm::Euclidean)).is_empty());
        for y in [0.4, 0.6, 0.4] {
            mem.insert(Cut::from_response(p.oracle(&[y], 1).unwrap()));
        }
        assert_eq!(mem.len(), 2);
        let kept = memory_filter(&mem, &TrustRegion::new(vec![0.0], 1.0 / 2.0 * 1.0, Norm::Euclidean));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].center, vec![0.4]);
    }

    #[test]
    fn memory_reuse_skips_known_jets() {
        let p = MaxRoot::new(1);
        let mut mem = MemoryStore::new();
        let prm = params(1, Strategy::Exact1d, BundleInit::MemoryReuse, 20);
        let tr = TrustRegion::new(vec![0.1], 0.5, Norm::Euclidean);
        let first = build_bundle(&p, &tr, &prm, Some(&mut mem)).unwrap();
        assert_eq!(first.oracle_calls, 2);
        // rerunning at the same center reuses both stored jets
        let again = build_bundle(&p, &tr, &prm, Some(&mut mem)).unwrap();
        assert_eq!(again.oracle_calls, 0);
        assert_eq!(again.inner_iterations, 0);
    }

    #[test]
    fn cap_is_flagged() {
        let p = MaxRoot::new(4);
        // the first step lowers x_0 to 0.2, where x_3 takes over the max
        let tr = TrustRegion::new(vec![0.3, 0.1, -0.2, 0.29], 0.1, Norm::Max);
        let r = build_bundle(&p, &tr, &params(1, Strategy::Lp, BundleInit::Singleton, 0), None).unwrap();
        assert!(r.max_inner_exceeded);
        assert_eq!(r.inner_iterations, 0);
        assert!(*r.last_gap() > 0.1f64.powf(1.5));
    }

    #[test]
    fn default_cap() {
        assert_eq!(default_max_inner(Some(4), 2), 40);
        assert_eq!(default_max_inner(None, 3), 80);
    }
}
