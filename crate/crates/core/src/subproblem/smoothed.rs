//! Log-sum-exp homotopy with multi-start for a Euclidean ball.
//!
//! `φ_t(z) = M(z) + t·log Σ_k exp((T_k(z) − M(z))/t)` is minimized at a
//! decreasing sequence of `t` by a regularized Newton step that solves a
//! trust-region subproblem exactly via the eigendecomposition of the
//! Hessian. The best point is then refined on the true model.

use rayon::prelude::*;

use crate::linalg::{solve, sym_eigen, Mat};
use crate::model::{active_cuts, Bundle, CompiledCut};
use crate::rng::Stream;
use crate::scalar::{dot, norm2, Scalar};

use super::{Norm, SolveStats, SolverOptions, SubproblemError, SubproblemSolution};

struct Ctx<'a, S> {
    cuts: &'a [CompiledCut<S>],
    x: &'a [S],
    eps: S,
    n: usize,
}

struct Smooth<S> {
    phi: S,
    grad: Vec<S>,
    hess: Vec<S>,
    weights: Vec<S>,
}

/// Softmax weights below this are dropped from derivative sums.
const WEIGHT_CUTOFF: f64 = 1e-18;

impl<S: Scalar> Ctx<'_, S> {
    fn point(&self, w: &[S]) -> Vec<S> {
        self.x.iter().zip(w).map(|(a, b)| a.clone() + b.clone()).collect()
    }

    fn model(&self, w: &[S]) -> S {
        let z = self.point(w);
        self.cuts.iter().map(|c| c.value(&z)).reduce(S::max_of).expect("nonempty bundle")
    }

    fn phi(&self, w: &[S], t: &S) -> S {
        let z = self.point(w);
        let vals: Vec<S> = self.cuts.iter().map(|c| c.value(&z)).collect();
        lse(&vals, t).0
    }

    fn smooth(&self, w: &[S], t: &S) -> Smooth<S> {
        let n = self.n;
        let z = self.point(w);
        let vals: Vec<S> = self.cuts.iter().map(|c| c.value(&z)).collect();
        let (phi, weights) = lse(&vals, t);
        let cutoff = S::from_f64(WEIGHT_CUTOFF);
        let mut grad = vec![S::zero(); n];
        let mut hess = vec![S::zero(); n * n];
        let mut outer = vec![S::zero(); n * n];
        for (c, p) in self.cuts.iter().zip(&weights) {
            if *p < cutoff {
                continue;
            }
            let g = c.gradient(&z);
            for i in 0..n {
                grad[i] += p.clone() * g[i].clone();
                for j in 0..n {
                    outer[i * n + j] += p.clone() * g[i].clone() * g[j].clone();
                }
            }
            if !c.is_affine() {
                for (h, hk) in hess.iter_mut().zip(c.hessian(&z)) {
                    *h += p.clone() * hk;
                }
            }
        }
        let inv_t = S::one() / t.clone();
        for i in 0..n {
            for j in 0..n {
                let cov = outer[i * n + j].clone() - grad[i].clone() * grad[j].clone();
                hess[i * n + j] += inv_t.clone() * cov;
            }
        }
        Smooth { phi, grad, hess, weights }
    }

    /// Minimize `gᵀ(v − w) + ½(v − w)ᵀ|H|(v − w)` over `‖v‖ ≤ ε`, where
    /// `|H|` takes absolute eigenvalues with a small positive floor.
    fn trs(&self, s: &Smooth<S>, w: &[S]) -> Vec<S> {
        let n = self.n;
        let (lam, vecs) = sym_eigen(&Mat { n, data: s.hess.clone() });
        let lmax = lam.iter().fold(S::zero(), |m, l| m.max_of(l.abs()));
        let gnorm = norm2(&s.grad);
        let floor = (lmax * S::from_f64(1e-10))
            .max_of(gnorm / self.eps.clone() * S::from_f64(1e-12))
            .max_of(S::from_f64(1e-200));
        let lc: Vec<S> = lam.iter().map(|l| l.abs().max_of(floor.clone())).collect();
        let b: Vec<S> = (0..n).map(|k| lc[k].clone() * dot(&vecs[k], w) - dot(&vecs[k], &s.grad)).collect();
        let norm_at = |nu: &S| -> S {
            let mut acc = S::zero();
            for k in 0..n {
                let c = b[k].clone() / (lc[k].clone() + nu.clone());
                acc += c.clone() * c;
            }
            acc.sqrt()
        };
        let mut nu = S::zero();
        if norm_at(&nu) > self.eps {
            // Newton on 1/‖v(ν)‖ − 1/ε, monotone from the left
            let inv_eps = S::one() / self.eps.clone();
            let tol = S::epsilon() * S::from_f64(16.0);
            for _ in 0..100 {
                let r = norm_at(&nu);
                let mut d3 = S::zero();
                for k in 0..n {
                    let den = lc[k].clone() + nu.clone();
                    d3 += b[k].clone() * b[k].clone() / (den.clone() * den.clone() * den);
                }
                let psi = S::one() / r.clone() - inv_eps.clone();
                let dpsi = d3 / (r.clone() * r.clone() * r.clone());
                if dpsi.is_zero() {
                    break;
                }
                let step = psi.clone() / dpsi;
                nu -= step.clone();
                if nu < S::zero() {
                    nu = S::zero();
                }
                if (psi * self.eps.clone()).abs() <= tol {
                    break;
                }
            }
        }
        let mut v = vec![S::zero(); n];
        for k in 0..n {
            let c = b[k].clone() / (lc[k].clone() + nu.clone());
            for i in 0..n {
                v[i] += c.clone() * vecs[k][i].clone();
            }
        }
        project_ball(v, &self.eps)
    }

    /// Damped Newton on `φ_t` from `w`. Returns the end point, whether it
    /// stopped at a stationary point, the step count and the last direction.
    fn descend(&self, mut w: Vec<S>, t: &S, max_iter: usize) -> Descent<S> {
        let step_tol = self.eps.clone() * S::epsilon() * S::from_f64(1e3);
        let mut dir = vec![S::zero(); self.n];
        let mut iters = 0;
        let mut converged = false;
        while iters < max_iter {
            iters += 1;
            let s = self.smooth(&w, t);
            let target = self.trs(&s, &w);
            let d: Vec<S> = target.iter().zip(&w).map(|(a, b)| a.clone() - b.clone()).collect();
            let slope = dot(&s.grad, &d);
            if norm2(&d) <= step_tol || slope >= S::zero() {
                converged = true;
                break;
            }
            let mut alpha = S::one();
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<S> = w.iter().zip(&d).map(|(a, b)| a.clone() + alpha.clone() * b.clone()).collect();
                let p = self.phi(&cand, t);
                if p <= s.phi.clone() + S::from_f64(1e-4) * alpha.clone() * slope.clone() {
                    accepted = Some((cand, p));
                    break;
                }
                alpha = alpha * S::from_f64(0.5);
            }
            let Some((next, p)) = accepted else {
                converged = true;
                break;
            };
            dir = d;
            let gain = s.phi.clone() - p;
            w = next;
            if gain <= S::epsilon() * S::from_f64(4.0) * (S::one() + s.phi.abs()) {
                converged = true;
                break;
            }
        }
        Descent { w, converged, iters, dir }
    }
}

struct Descent<S> {
    w: Vec<S>,
    converged: bool,
    iters: usize,
    dir: Vec<S>,
}

/// `(M + t·log Σ exp((v − M)/t), softmax weights)`.
fn lse<S: Scalar>(vals: &[S], t: &S) -> (S, Vec<S>) {
    let m = vals.iter().cloned().reduce(S::max_of).expect("nonempty");
    let e: Vec<S> = vals.iter().map(|v| ((v.clone() - m.clone()) / t.clone()).exp()).collect();
    let z = e.iter().fold(S::zero(), |a, b| a + b.clone());
    let phi = m + t.clone() * z.ln();
    (phi, e.into_iter().map(|v| v / z.clone()).collect())
}

fn project_ball<S: Scalar>(v: Vec<S>, eps: &S) -> Vec<S> {
    let r = norm2(&v);
    if r > *eps {
        let s = eps.clone() / r;
        v.into_iter().map(|a| a * s.clone()).collect()
    } else {
        v
    }
}

/// Value first, then lexicographic position.
fn better<S: Scalar>(a: &(S, Vec<S>), b: &(S, Vec<S>)) -> bool {
    match a.0.total_cmp_nonnan(&b.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => {
            for (x, y) in a.1.iter().zip(&b.1) {
                match x.total_cmp_nonnan(y) {
                    std::cmp::Ordering::Less => return true,
                    std::cmp::Ordering::Greater => return false,
                    _ => {}
                }
            }
            false
        }
    }
}

/// Minimize the bundle model over a Euclidean ball.
pub fn solve_smoothed_multistart<S: Scalar>(
    w: &Bundle<S>,
    opts: &SolverOptions,
) -> Result<SubproblemSolution<S>, SubproblemError> {
    if w.is_empty() {
        return Err(SubproblemError::EmptyBundle);
    }
    let tr = w.region();
    if tr.norm != Norm::Euclidean {
        return Err(SubproblemError::Incompatible { strategy: "smoothed", reason: "needs a Euclidean trust region".into() });
    }
    let n = w.dim();
    let ctx = Ctx { cuts: w.compiled(), x: &tr.center, eps: tr.radius.clone(), n };
    let eps = ctx.eps.clone();

    // starts: cut centers, the center, random ball points
    let mut starts: Vec<Vec<S>> = w
        .cuts()
        .iter()
        .map(|c| project_ball(c.center.iter().zip(ctx.x).map(|(a, b)| a.clone() - b.clone()).collect(), &eps))
        .collect();
    starts.push(vec![S::zero(); n]);
    let mut rng = Stream::new(opts.seed);
    for _ in 0..opts.n_rand.unwrap_or(2 * n) {
        starts.push(rng.unit_ball(n).into_iter().map(|u| eps.clone() * S::from_f64(u)).collect());
    }
    let n_starts = starts.len();

    // the best true-model point probed so far, for dominance
    let mut best: (S, Vec<S>) = (ctx.model(&starts[0]), starts[0].clone());
    for s in &starts[1..] {
        let cand = (ctx.model(s), s.clone());
        if better(&cand, &best) {
            best = cand;
        }
    }

    let at_x: Vec<S> = w.cut_values(ctx.x);
    let vmax = at_x.iter().cloned().reduce(S::max_of).unwrap();
    let vmin = at_x.iter().cloned().reduce(S::min_of).unwrap();
    let t_min = S::from_f64(opts.tol.max(1e-12)) * (S::one() + vmax.abs());
    let factor = S::from_f64(opts.stage_factor);
    let t_cap = t_min.clone() * factor.powi(opts.max_stages.saturating_sub(1) as i32);
    let mut t = eps.clone().max_of(vmax - vmin).min_of(t_cap).max_of(t_min.clone());

    let newton_cap = 100;
    let mut stages = 0;
    let mut inner = 0;
    let mut results: Vec<Descent<S>>;
    loop {
        stages += 1;
        let run = |s: &Vec<S>| ctx.descend(s.clone(), &t, newton_cap);
        results = if opts.parallel { starts.par_iter().map(run).collect() } else { starts.iter().map(run).collect() };
        inner += results.iter().map(|r| r.iters).sum::<usize>();

        // dedupe: keep the better of any two points that coincide
        let phis: Vec<S> = results.iter().map(|r| ctx.phi(&r.w, &t)).collect();
        let mut order: Vec<usize> = (0..results.len()).collect();
        order.sort_by(|&a, &b| {
            if better(&(phis[a].clone(), results[a].w.clone()), &(phis[b].clone(), results[b].w.clone())) {
                std::cmp::Ordering::Less
            } else if better(&(phis[b].clone(), results[b].w.clone()), &(phis[a].clone(), results[a].w.clone())) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let merge = eps.clone() * S::from_f64(1e-9);
        let mut kept: Vec<usize> = Vec::new();
        for i in order {
            if kept.iter().all(|&k| {
                let d: Vec<S> = results[i].w.iter().zip(&results[k].w).map(|(a, b)| a.clone() - b.clone()).collect();
                norm2(&d) > merge
            }) {
                kept.push(i);
            }
        }
        let mut taken: Vec<Option<Descent<S>>> = results.into_iter().map(Some).collect();
        results = kept.iter().map(|&i| taken[i].take().unwrap()).collect();
        starts = results.iter().map(|r| r.w.clone()).collect();

        if t <= t_min || stages >= opts.max_stages {
            break;
        }
        t = (t / factor.clone()).max_of(t_min.clone());
    }

    // best result on the true model
    let mut pick = 0;
    let mut pick_val = (ctx.model(&results[0].w), results[0].w.clone());
    for (i, r) in results.iter().enumerate().skip(1) {
        let cand = (ctx.model(&r.w), r.w.clone());
        if better(&cand, &pick_val) {
            pick = i;
            pick_val = cand;
        }
    }
    let converged = results[pick].converged && t <= t_min;
    let dir = results[pick].dir.clone();
    if better(&pick_val, &best) {
        best = pick_val;
    }

    // line search on the true model along the last direction
    if norm2(&dir) > S::zero() {
        let mut alpha = S::one();
        for _ in 0..40 {
            let cand = project_ball(best.1.iter().zip(&dir).map(|(a, b)| a.clone() + alpha.clone() * b.clone()).collect(), &eps);
            let c = (ctx.model(&cand), cand);
            if better(&c, &best) {
                best = c;
                break;
            }
            alpha = alpha * S::from_f64(0.5);
        }
    }

    let weights = ctx.smooth(&best.1, &t_min).weights;
    let mut polished = false;
    let mut polish_lambda = None;
    if let Some((pw, lam)) = kkt_polish(&ctx, &best.1, &weights, opts) {
        let pw = project_ball(pw, &eps);
        let c = (ctx.model(&pw), pw);
        if c.0 <= best.0 {
            best = c;
            polished = true;
            polish_lambda = Some(lam);
        }
    }

    let z = ctx.point(&best.1);
    let boundary_active = tr.on_boundary(&z, opts.tol_bnd);
    let multipliers = if boundary_active {
        None
    } else {
        let act = active_cuts(w, &z, &S::from_f64(opts.tol_act));
        let from_polish = polish_lambda.filter(|l: &Vec<(usize, S)>| {
            l.iter().all(|(k, v)| act.contains(k) || v.abs() <= S::from_f64(1e-10))
        });
        let raw: Vec<(usize, S)> = match from_polish {
            Some(l) => l.into_iter().filter(|(k, _)| act.contains(k)).collect(),
            None => {
                let wz = ctx.smooth(&best.1, &t_min).weights;
                act.iter().map(|&k| (k, wz[k].clone())).collect()
            }
        };
        let total = raw.iter().fold(S::zero(), |a, (_, v)| a + v.clone());
        if total > S::zero() {
            Some(raw.into_iter().map(|(k, v)| (k, v / total.clone())).collect())
        } else {
            Some(act.iter().map(|&k| (k, S::one() / S::from_usize(act.len()))).collect())
        }
    };

    Ok(SubproblemSolution {
        z,
        theta: best.0,
        boundary_active,
        multipliers,
        stats: SolveStats { starts: n_starts, inner_iterations: inner, stages },
        degraded: !converged && !polished,
        lp_basis: None,
    })
}

/// Newton on the KKT system of the epigraph problem restricted to the
/// nearly active cuts (and the ball constraint when it is tight).
fn kkt_polish<S: Scalar>(ctx: &Ctx<'_, S>, w0: &[S], weights: &[S], opts: &SolverOptions) -> Option<(Vec<S>, Vec<(usize, S)>)> {
    let n = ctx.n;
    let z0 = ctx.point(w0);
    let vals: Vec<S> = ctx.cuts.iter().map(|c| c.value(&z0)).collect();
    let m = vals.iter().cloned().reduce(S::max_of)?;
    let band = S::from_f64(1e-6) * (S::one() + m.abs());
    let mut act: Vec<usize> = (0..vals.len()).filter(|&k| m.clone() - vals[k].clone() <= band).collect();
    act.sort_by(|&a, &b| weights[b].total_cmp_nonnan(&weights[a]).then(a.cmp(&b)));
    act.truncate(n + 1);
    act.sort();
    let na = act.len();
    let bnd = norm2(w0) >= ctx.eps.clone() * S::from_f64(1.0 - opts.tol_bnd);

    let mut w = w0.to_vec();
    let wsum = act.iter().fold(S::zero(), |a, &k| a + weights[k].clone());
    let mut lam: Vec<S> = if wsum > S::zero() {
        act.iter().map(|&k| weights[k].clone() / wsum.clone()).collect()
    } else {
        vec![S::one() / S::from_usize(na); na]
    };
    let mut nu = S::zero();
    if bnd {
        let mut gbar = vec![S::zero(); n];
        for (l, &k) in lam.iter().zip(&act) {
            for (gi, v) in gbar.iter_mut().zip(ctx.cuts[k].gradient(&z0)) {
                *gi += l.clone() * v;
            }
        }
        nu = (-dot(&w, &gbar) / dot(&w, &w)).max_of(S::zero());
    }

    let dim = n + na + usize::from(bnd);
    let residual = |w: &[S], lam: &[S], nu: &S| -> (Vec<S>, Vec<Vec<S>>, Vec<S>) {
        let z = ctx.point(w);
        let grads: Vec<Vec<S>> = act.iter().map(|&k| ctx.cuts[k].gradient(&z)).collect();
        let vs: Vec<S> = act.iter().map(|&k| ctx.cuts[k].value(&z)).collect();
        let mut f = vec![S::zero(); dim];
        for i in 0..n {
            let mut s = nu.clone() * w[i].clone();
            for (l, g) in lam.iter().zip(&grads) {
                s += l.clone() * g[i].clone();
            }
            f[i] = s;
        }
        for a in 1..na {
            f[n + a - 1] = vs[a].clone() - vs[0].clone();
        }
        f[n + na - 1] = lam.iter().fold(-S::one(), |a, l| a + l.clone());
        if bnd {
            f[n + na] = (dot(w, w) - ctx.eps.clone() * ctx.eps.clone()) * S::from_f64(0.5);
        }
        (f, grads, vs)
    };

    let (mut f, mut grads, _) = residual(&w, &lam, &nu);
    let gscale = grads.iter().flatten().fold(S::one(), |a, g| a.max_of(g.abs()));
    let target = S::epsilon() * S::from_f64(1e3) * gscale;
    for _ in 0..30 {
        let fnorm = norm2(&f);
        if fnorm <= target {
            break;
        }
        let z = ctx.point(&w);
        let mut jac = Mat::<S>::zeros(dim);
        for (l, &k) in lam.iter().zip(&act) {
            if !ctx.cuts[k].is_affine() {
                let h = ctx.cuts[k].hessian(&z);
                for i in 0..n {
                    for j in 0..n {
                        let v = jac.get(i, j).clone() + l.clone() * h[i * n + j].clone();
                        jac.set(i, j, v);
                    }
                }
            }
        }
        for i in 0..n {
            let v = jac.get(i, i).clone() + nu.clone();
            jac.set(i, i, v);
            for a in 0..na {
                jac.set(i, n + a, grads[a][i].clone());
            }
            if bnd {
                jac.set(i, n + na, w[i].clone());
            }
        }
        for a in 1..na {
            for j in 0..n {
                jac.set(n + a - 1, j, grads[a][j].clone() - grads[0][j].clone());
            }
        }
        for a in 0..na {
            jac.set(n + na - 1, n + a, S::one());
        }
        if bnd {
            for j in 0..n {
                jac.set(n + na, j, w[j].clone());
            }
        }
        let rhs: Vec<S> = f.iter().map(|v| -v.clone()).collect();
        let delta = solve(&jac, &rhs)?;
        let mut alpha = S::one();
        let mut moved = false;
        for _ in 0..20 {
            let w2: Vec<S> = (0..n).map(|i| w[i].clone() + alpha.clone() * delta[i].clone()).collect();
            let l2: Vec<S> = (0..na).map(|a| lam[a].clone() + alpha.clone() * delta[n + a].clone()).collect();
            let nu2 = if bnd { nu.clone() + alpha.clone() * delta[n + na].clone() } else { S::zero() };
            let (f2, g2, _) = residual(&w2, &l2, &nu2);
            if norm2(&f2) < fnorm {
                w = w2;
                lam = l2;
                nu = nu2;
                f = f2;
                grads = g2;
                moved = true;
                break;
            }
            alpha = alpha * S::from_f64(0.5);
        }
        if !moved {
            break;
        }
    }
    if norm2(&f) > target * S::from_f64(1e3) {
        return None;
    }
    let neg = S::from_f64(-1e-8);
    if lam.iter().any(|l| *l < neg) || nu < neg {
        return None;
    }
    let lam = act.into_iter().zip(lam.into_iter().map(|l| l.max_of(S::zero()))).collect();
    Some((w, lam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_eval, Cut};
    use crate::problems::{HalfHalf, Problem};
    use crate::subproblem::tests::{affine_cut, quad_cut};
    use crate::subproblem::TrustRegion;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn degenerate_valley_keeps_a_feasible_second_coordinate() {
        let mut w = Bundle::new(TrustRegion::new(vec![0.0, 0.0], 1.0, Norm::Euclidean));
        w.push(affine_cut(vec![0.0, 0.0], 0.0, vec![1.0, 0.0])).unwrap();
        w.push(affine_cut(vec![0.5, 0.0], 0.0, vec![-1.0, 0.0])).unwrap();
        // second cut: −(z₁ − 0.5) + 0 ⇒ crossing at z₁ = 0.25
        let s = solve_smoothed_multistart(&w, &opts()).unwrap();
        assert!((s.z[0] - 0.25).abs() < 1e-9, "{:?}", s.z);
        assert!((s.theta - 0.25).abs() < 1e-9);
        let mut w = Bundle::new(TrustRegion::new(vec![0.0, 0.0], 1.0, Norm::Euclidean));
        w.push(affine_cut(vec![0.0, 0.0], 0.0, vec![1.0, 0.0])).unwrap();
        w.push(affine_cut(vec![0.0, 0.5], 0.0, vec![-1.0, 0.0])).unwrap();
        let s = solve_smoothed_multistart(&w, &opts()).unwrap();
        assert!(s.z[0].abs() < 1e-9 && s.theta.abs() < 1e-9);
        assert!(s.z[1].abs() <= 1.0);
    }

    #[test]
    fn quadratic_pair_kkt_residual() {
        let mut w = Bundle::new(TrustRegion::new(vec![0.0, 0.0], 2.0, Norm::Euclidean));
        w.push(quad_cut(vec![0.0, 0.0], 0.0, vec![1.0, 0.2], vec![1.0, 0.0, 0.0, 1.0])).unwrap();
        w.push(quad_cut(vec![0.5, 0.0], 0.0, vec![-1.0, 0.1], vec![2.0, 0.0, 0.0, 0.5])).unwrap();
        let s = solve_smoothed_multistart(&w, &opts()).unwrap();
        assert!(!s.boundary_active);
        let m = s.multipliers.unwrap();
        let total: f64 = m.iter().map(|(_, l)| l).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut r = [0.0; 2];
        for (k, l) in &m {
            let g = w.compiled()[*k].gradient(&s.z);
            r[0] += l * g[0];
            r[1] += l * g[1];
        }
        assert!(r[0].hypot(r[1]) < 1e-6, "{r:?}");
    }

    #[test]
    fn dominance_over_random_probes() {
        let mut rng = Stream::new(3);
        for _ in 0..10 {
            let n = 3;
            let mut w = Bundle::new(TrustRegion::new(vec![0.0; n], 1.0, Norm::Euclidean));
            for _ in 0..4 {
                let y: Vec<f64> = rng.unit_ball(n);
                let a: Vec<f64> = rng.normal_vec(n * n);
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] = (a[i * n + j] + a[j * n + i]) * 0.5;
                    }
                }
                w.push(quad_cut(y, rng.normal(), rng.normal_vec(n), h)).unwrap();
            }
            let s = solve_smoothed_multistart(&w, &opts()).unwrap();
            assert!(w.region().contains(&s.z, 1e-12));
            assert!((s.theta - model_eval(&w, &s.z).unwrap().0).abs() < 1e-12);
            for _ in 0..2000 {
                let z = rng.unit_ball(n);
                assert!(s.theta <= model_eval(&w, &z).unwrap().0 + 1e-6);
            }
        }
    }

    #[test]
    fn halfhalf_first_subproblem_vs_random_search() {
        let p = HalfHalf::new();
        let x = vec![20.08; 8];
        let mut w = Bundle::new(TrustRegion::new(x.clone(), 30.0, Norm::Euclidean));
        w.push(Cut::from_response(p.oracle(&x, 2).unwrap())).unwrap();
        let s = solve_smoothed_multistart(&w, &opts()).unwrap();
        let mut rng = Stream::new(99);
        let mut best = f64::INFINITY;
        for _ in 0..10_000 {
            let z: Vec<f64> = x.iter().zip(rng.unit_ball(8)).map(|(a, u)| a + 30.0 * u).collect();
            best = best.min(model_eval(&w, &z).unwrap().0);
        }
        assert!(s.theta <= best + 1e-4, "{} vs {best}", s.theta);
    }
}
