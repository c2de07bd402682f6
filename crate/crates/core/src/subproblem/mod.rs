//! Minimize the cutting-plane model over a trust region.
//!
//! Three strategies: exact enumeration in one dimension, a dense simplex
//! for affine cuts over a box, and a smoothed multi-start homotopy for
//! everything else on a Euclidean ball.

mod exact1d;
mod lp;
mod smoothed;

pub use exact1d::solve_exact_1d;
pub use lp::{solve_lp_q1, ColumnId};
pub use smoothed::solve_smoothed_multistart;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{model_eval, Bundle, CompiledCut};
use crate::scalar::{dot, norm2, norm_inf, sub_vec, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Euclidean,
    Max,
}

impl Norm {
    pub fn measure<S: Scalar>(&self, v: &[S]) -> S {
        match self {
            Norm::Euclidean => norm2(v),
            Norm::Max => norm_inf(v),
        }
    }
}

/// Closed ball `B̄_ε(x)` in the chosen norm.
#[derive(Clone, Debug, PartialEq)]
pub struct TrustRegion<S> {
    pub center: Vec<S>,
    pub radius: S,
    pub norm: Norm,
}

impl<S: Scalar> TrustRegion<S> {
    pub fn new(center: Vec<S>, radius: S, norm: Norm) -> Self {
        assert!(radius > S::zero(), "trust-region radius must be positive");
        TrustRegion { center, radius, norm }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn distance(&self, z: &[S]) -> S {
        self.norm.measure(&sub_vec(z, &self.center))
    }

    pub fn contains(&self, z: &[S], rel_slack: f64) -> bool {
        self.distance(z) <= self.radius.clone() * S::from_f64(1.0 + rel_slack)
    }

    /// Nearest point of the ball (radial for Euclidean, clamped for max).
    pub fn project(&self, z: &[S]) -> Vec<S> {
        let d = sub_vec(z, &self.center);
        match self.norm {
            Norm::Euclidean => {
                let r = norm2(&d);
                if r <= self.radius {
                    return z.to_vec();
                }
                let s = self.radius.clone() / r;
                self.center.iter().zip(&d).map(|(c, di)| c.clone() + s.clone() * di.clone()).collect()
            }
            Norm::Max => self
                .center
                .iter()
                .zip(&d)
                .map(|(c, di)| {
                    let lo = -self.radius.clone();
                    c.clone() + di.clone().max_of(lo).min_of(self.radius.clone())
                })
                .collect(),
        }
    }

    pub fn on_boundary(&self, z: &[S], tol_bnd: f64) -> bool {
        self.distance(z) >= self.radius.clone() * S::from_f64(1.0 - tol_bnd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Exact1d,
    Lp,
    Smoothed,
    Auto,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Exact1d => "exact1d",
            Strategy::Lp => "lp",
            Strategy::Smoothed => "smoothed",
            Strategy::Auto => "auto",
        }
    }
}

/// Tunables shared by all strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol: f64,
    pub tol_bnd: f64,
    pub tol_act: f64,
    /// Random starts for the smoothed solver; `None` means `2n`.
    pub n_rand: Option<usize>,
    pub max_stages: usize,
    pub stage_factor: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            tol_bnd: 1e-6,
            tol_act: 1e-8,
            n_rand: None,
            max_stages: 14,
            stage_factor: 10.0,
            seed: 0,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub starts: usize,
    pub inner_iterations: usize,
    pub stages: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemSolution<S> {
    pub z: Vec<S>,
    pub theta: S,
    pub boundary_active: bool,
    /// Convex weights `(cut index, λ)` over active cuts.
    pub multipliers: Option<Vec<(usize, S)>>,
    pub stats: SolveStats,
    /// Inner solver did not converge; `z` is the best point found.
    pub degraded: bool,
    /// Optimal simplex basis, reusable as a warm start.
    pub lp_basis: Option<Vec<ColumnId>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("empty bundle")]
    EmptyBundle,
    #[error("strategy {strategy} cannot handle this instance: {reason}")]
    Incompatible { strategy: &'static str, reason: String },
}

/// Concrete strategy `Auto` resolves to for this bundle.
pub fn resolve_strategy<S: Scalar>(w: &Bundle<S>, strategy: Strategy) -> Strategy {
    match strategy {
        Strategy::Auto => {
            if w.dim() == 1 {
                Strategy::Exact1d
            } else if w.region().norm == Norm::Max {
                Strategy::Lp
            } else {
                Strategy::Smoothed
            }
        }
        s => s,
    }
}

/// Solve with the requested strategy. `warm` is an LP basis from a
/// previous solve on a prefix of this bundle.
pub fn solve<S: Scalar>(
    w: &Bundle<S>,
    strategy: Strategy,
    opts: &SolverOptions,
    warm: Option<&[ColumnId]>,
) -> Result<SubproblemSolution<S>, SubproblemError> {
    if w.is_empty() {
        return Err(SubproblemError::EmptyBundle);
    }
    let mut sol = match resolve_strategy(w, strategy) {
        Strategy::Exact1d => return solve_exact_1d(w, opts),
        Strategy::Lp => solve_lp_q1(w, opts, warm)?,
        _ => solve_smoothed_multistart(w, opts)?,
    };
    drop_flat_components(w, &mut sol, opts);
    Ok(sol)
}

/// Orthonormal basis of the span of every cut's gradient and Hessian rows.
/// `None` when some cut is of order three or more.
fn cut_data_basis<S: Scalar>(w: &Bundle<S>) -> Option<Vec<Vec<S>>> {
    let n = w.dim();
    let mut vecs: Vec<Vec<S>> = Vec::new();
    for cut in w.compiled() {
        match cut {
            CompiledCut::Quadratic { g, h, .. } => {
                vecs.push(g.clone());
                if let Some(h) = h {
                    vecs.extend(h.chunks(n).map(|r| r.to_vec()));
                }
            }
            CompiledCut::General(_) => return None,
        }
    }
    let scale = vecs.iter().map(|v| norm2(v)).fold(S::zero(), |a, b| a.max_of(b));
    let tol = scale * S::epsilon() * S::from_f64(1e3 * n as f64);
    let mut basis: Vec<Vec<S>> = Vec::new();
    for mut v in vecs {
        // two passes of Gram-Schmidt keep the basis orthogonal to roundoff
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c.clone() * bi.clone();
                }
            }
        }
        let nv = norm2(&v);
        if nv > tol {
            basis.push(v.into_iter().map(|x| x / nv.clone()).collect());
            if basis.len() == n {
                break;
            }
        }
    }
    Some(basis)
}

/// The model is constant along directions orthogonal to all cut data, so
/// its minimizers form a cylinder. Pick the member whose step from the
/// center lies in the span of the cut data: every cut value is unchanged
/// and the Euclidean step length can only shrink.
fn drop_flat_components<S: Scalar>(w: &Bundle<S>, sol: &mut SubproblemSolution<S>, opts: &SolverOptions) {
    let Some(basis) = cut_data_basis(w) else { return };
    if basis.len() == w.dim() {
        return;
    }
    let tr = w.region();
    let u = sub_vec(&sol.z, &tr.center);
    let mut step = vec![S::zero(); u.len()];
    for b in &basis {
        let c = dot(b, &u);
        for (si, bi) in step.iter_mut().zip(b) {
            *si += c.clone() * bi.clone();
        }
    }
    let z: Vec<S> = tr.center.iter().zip(&step).map(|(c, s)| c.clone() + s.clone()).collect();
    if !tr.contains(&z, 1e-12) {
        return;
    }
    let Ok((theta, _)) = model_eval(w, &z) else { return };
    let slack = S::epsilon() * S::from_f64(1e3) * (S::one() + sol.theta.abs());
    if theta > sol.theta.clone() + slack {
        return;
    }
    sol.boundary_active = tr.on_boundary(&z, opts.tol_bnd);
    if sol.boundary_active {
        sol.multipliers = None;
    }
    sol.z = z;
    sol.theta = theta;
}

/// Min-norm convex weights over the gradients of `active` at `z`.
pub(crate) fn hull_weights<S: Scalar>(w: &Bundle<S>, active: &[usize], z: &[S]) -> Vec<(usize, S)> {
    if active.len() == 1 {
        return vec![(active[0], S::one())];
    }
    let grads: Vec<Vec<S>> = active.iter().map(|&k| w.compiled()[k].gradient(z)).collect();
    let (_, lam) = crate::diagnostics::min_norm_convex_hull(&grads, &S::from_f64(1e-14));
    active.iter().copied().zip(lam).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_eval, Cut};
    use crate::problems::{MaxRoot, Problem};
    use crate::taylor::{SymTensor, TaylorJet};

    #[test]
    fn flat_directions_stay_at_center() {
        for (norm, strategy) in [(Norm::Max, Strategy::Lp), (Norm::Euclidean, Strategy::Smoothed)] {
            let mut w = Bundle::new(TrustRegion::new(vec![0.2, 0.1, -0.3], 0.5, norm));
            w.push(affine_cut(vec![0.2, 0.1, -0.3], 1.0, vec![1.0, 0.0, 0.0])).unwrap();
            w.push(affine_cut(vec![-0.2, 0.1, -0.3], 1.0, vec![-1.0, 0.0, 0.0])).unwrap();
            let s = solve(&w, strategy, &SolverOptions::default(), None).unwrap();
            assert!(s.z[0].abs() < 1e-8, "{:?}", s.z);
            assert_eq!(&s.z[1..], &[0.1, -0.3]);
        }
    }

    pub(crate) fn affine_cut(center: Vec<f64>, c: f64, g: Vec<f64>) -> Cut<f64> {
        let n = center.len();
        let jet = TaylorJet::new(center.clone(), vec![SymTensor::constant(c, n), SymTensor::vector(&g)]).unwrap();
        Cut { center, jet, flagged: false }
    }

    pub(crate) fn quad_cut(center: Vec<f64>, c: f64, g: Vec<f64>, h: Vec<f64>) -> Cut<f64> {
        let n = center.len();
        let jet =
            TaylorJet::new(center.clone(), vec![SymTensor::constant(c, n), SymTensor::vector(&g), SymTensor::matrix(n, &h)])
                .unwrap();
        Cut { center, jet, flagged: false }
    }

    #[test]
    fn region_geometry() {
        let tr = TrustRegion::new(vec![1.0, 1.0], 2.0, Norm::Max);
        assert_eq!(tr.project(&[5.0, 0.5]), vec![3.0, 0.5]);
        assert!(tr.on_boundary(&[3.0, 0.0], 1e-6));
        let tr = TrustRegion::new(vec![0.0, 0.0], 1.0, Norm::Euclidean);
        let p = tr.project(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert!(tr.contains(&p, 1e-12));
    }

    #[test]
    fn single_linear_cut_on_ball() {
        let g = vec![3.0, -4.0];
        let mut w = Bundle::new(TrustRegion::new(vec![0.5, 0.5], 0.2, Norm::Euclidean));
        w.push(affine_cut(vec![0.5, 0.5], 1.0, g.clone())).unwrap();
        let s = solve(&w, Strategy::Auto, &SolverOptions::default(), None).unwrap();
        assert!((s.z[0] - (0.5 - 0.2 * 0.6)).abs() < 1e-9);
        assert!((s.z[1] - (0.5 + 0.2 * 0.8)).abs() < 1e-9);
        assert!((s.theta - (1.0 - 0.2 * 5.0)).abs() < 1e-9);
        assert!(s.boundary_active);
    }

    #[test]
    fn maxroot_first_cut_hits_left_endpoint() {
        let p = MaxRoot::new(1);
        for norm in [Norm::Euclidean, Norm::Max] {
            let mut w = Bundle::new(TrustRegion::new(vec![0.1], 0.5, norm));
            w.push(Cut::from_response(p.oracle(&[0.1], 1).unwrap())).unwrap();
            for st in [Strategy::Exact1d, Strategy::Smoothed, Strategy::Lp] {
                if st == Strategy::Smoothed && norm == Norm::Max || st == Strategy::Lp && norm == Norm::Euclidean {
                    continue;
                }
                let s = solve(&w, st, &SolverOptions::default(), None).unwrap();
                assert!((s.z[0] + 0.4).abs() < 1e-9, "{st:?}: {}", s.z[0]);
                assert!(s.boundary_active);
                assert!((s.theta - model_eval(&w, &s.z).unwrap().0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spd_quadratic_interior_minimizer() {
        // z̄ = y − H⁻¹g
        let h = vec![2.0, 0.5, 0.5, 1.0];
        let g = vec![0.3, -0.2];
        let mut w = Bundle::new(TrustRegion::new(vec![0.0, 0.0], 1.0, Norm::Euclidean));
        w.push(quad_cut(vec![0.0, 0.0], 0.0, g.clone(), h)).unwrap();
        let s = solve(&w, Strategy::Smoothed, &SolverOptions::default(), None).unwrap();
        let det = 2.0 - 0.25;
        let z = [-(1.0 * 0.3 - 0.5 * -0.2) / det, -(-0.5 * 0.3 + 2.0 * -0.2) / det];
        assert!((s.z[0] - z[0]).abs() < 1e-8 && (s.z[1] - z[1]).abs() < 1e-8, "{:?}", s.z);
        assert!(!s.boundary_active);
        assert_eq!(s.multipliers.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn incompatible_strategies_are_rejected() {
        let mut w = Bundle::new(TrustRegion::new(vec![0.0, 0.0], 1.0, Norm::Euclidean));
        w.push(affine_cut(vec![0.0, 0.0], 0.0, vec![1.0, 0.0])).unwrap();
        assert!(matches!(solve(&w, Strategy::Exact1d, &SolverOptions::default(), None), Err(SubproblemError::Incompatible { .. })));
        assert!(matches!(solve(&w, Strategy::Lp, &SolverOptions::default(), None), Err(SubproblemError::Incompatible { .. })));
        let empty: Bundle<f64> = Bundle::new(TrustRegion::new(vec![0.0], 1.0, Norm::Euclidean));
        assert_eq!(solve(&empty, Strategy::Auto, &SolverOptions::default(), None), Err(SubproblemError::EmptyBundle));
    }
}
