//! Affine cuts over a max-norm box.
//!
//! The epigraph LP `min θ s.t. a_k + g_kᵀu ≤ θ, |u_i| ≤ ε` is solved through
//! its dual in standard form
//!
//! ```text
//! min −Σ a_k λ_k + ε Σ (μ_i + ν_i)
//! s.t. Σ λ_k g_k − μ + ν = 0,  Σ λ_k = 1,  λ, μ, ν ≥ 0
//! ```
//!
//! whose simplex multipliers are `(u, −θ)`. The constraint matrix does not
//! depend on the center or the radius, so any earlier basis stays feasible
//! and serves as a warm start.

use serde::{Deserialize, Serialize};

use crate::linalg::{invert, Mat};
use crate::model::Bundle;
use crate::scalar::{dot, Scalar};

use super::{Norm, SolveStats, SolverOptions, SubproblemError, SubproblemSolution};

/// Dual column: a cut weight or a box bound multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnId {
    Lambda(usize),
    Mu(usize),
    Nu(usize),
}

struct Lp<S> {
    n: usize,
    eps: S,
    /// `a_k` and `g_k` per cut.
    a: Vec<S>,
    g: Vec<Vec<S>>,
}

impl<S: Scalar> Lp<S> {
    fn column(&self, c: ColumnId) -> Vec<S> {
        let mut v = vec![S::zero(); self.n + 1];
        match c {
            ColumnId::Lambda(k) => {
                v[..self.n].clone_from_slice(&self.g[k]);
                v[self.n] = S::one();
            }
            ColumnId::Mu(i) => v[i] = -S::one(),
            ColumnId::Nu(i) => v[i] = S::one(),
        }
        v
    }

    fn cost(&self, c: ColumnId) -> S {
        match c {
            ColumnId::Lambda(k) => -self.a[k].clone(),
            _ => self.eps.clone(),
        }
    }

    /// `c_j − πᵀ a_j` without forming the column.
    fn reduced_cost(&self, c: ColumnId, pi: &[S]) -> S {
        match c {
            ColumnId::Lambda(k) => -self.a[k].clone() - dot(&self.g[k], &pi[..self.n]) - pi[self.n].clone(),
            ColumnId::Mu(i) => self.eps.clone() + pi[i].clone(),
            ColumnId::Nu(i) => self.eps.clone() - pi[i].clone(),
        }
    }

    fn columns(&self) -> Vec<ColumnId> {
        // same order as col_rank
        let mut out: Vec<ColumnId> = (0..self.n).map(ColumnId::Mu).collect();
        out.extend((0..self.n).map(ColumnId::Nu));
        out.extend((0..self.a.len()).map(ColumnId::Lambda));
        out
    }

    fn cold_basis(&self) -> Vec<ColumnId> {
        let mut b = vec![ColumnId::Lambda(0)];
        for i in 0..self.n {
            b.push(if self.g[0][i] >= S::zero() { ColumnId::Mu(i) } else { ColumnId::Nu(i) });
        }
        b
    }

    fn basis_inverse(&self, basis: &[ColumnId]) -> Option<Mat<S>> {
        let m = self.n + 1;
        let mut b = Mat::<S>::zeros(m);
        for (c, &id) in basis.iter().enumerate() {
            for (r, v) in self.column(id).into_iter().enumerate() {
                b.set(r, c, v);
            }
        }
        invert(&b)
    }
}

/// `B⁻¹ e_{n+1}`, the basic solution for right-hand side `(0, …, 0, 1)`.
fn basic_solution<S: Scalar>(binv: &Mat<S>) -> Vec<S> {
    let m = binv.n;
    (0..m).map(|r| binv.get(r, m - 1).clone()).collect()
}

/// Exact LP optimum for a bundle of affine cuts on a max-norm box.
pub fn solve_lp_q1<S: Scalar>(
    w: &Bundle<S>,
    opts: &SolverOptions,
    warm: Option<&[ColumnId]>,
) -> Result<SubproblemSolution<S>, SubproblemError> {
    if w.is_empty() {
        return Err(SubproblemError::EmptyBundle);
    }
    let tr = w.region();
    if tr.norm != Norm::Max {
        return Err(SubproblemError::Incompatible { strategy: "lp", reason: "needs a max-norm trust region".into() });
    }
    if let Some(k) = w.compiled().iter().position(|c| !c.is_affine()) {
        return Err(SubproblemError::Incompatible { strategy: "lp", reason: format!("cut {k} is not affine") });
    }
    let n = w.dim();
    let x = &tr.center;
    let lp = Lp {
        n,
        eps: tr.radius.clone(),
        a: w.compiled().iter().map(|c| c.value(x)).collect(),
        g: w.compiled().iter().map(|c| c.gradient(x)).collect(),
    };
    let m = n + 1;
    let cols = lp.columns();

    let cscale = lp.a.iter().fold(S::one(), |s, a| s.max_of(a.abs()))
        + lp.eps.clone() * lp.g.iter().flatten().fold(S::one(), |s, g| s.max_of(g.abs()));
    let tol_d = cscale * S::epsilon() * S::from_f64(64.0);
    let tol_p = S::epsilon() * S::from_f64(1e3);

    // warm start if it is a valid feasible basis for this bundle
    let mut basis = lp.cold_basis();
    let mut binv = None;
    if let Some(wb) = warm {
        let valid = wb.len() == m
            && wb.iter().all(|c| match *c {
                ColumnId::Lambda(k) => k < lp.a.len(),
                ColumnId::Mu(i) | ColumnId::Nu(i) => i < n,
            });
        if valid {
            if let Some(inv) = lp.basis_inverse(wb) {
                if basic_solution(&inv).iter().all(|v| *v >= -tol_p.clone()) {
                    basis = wb.to_vec();
                    binv = Some(inv);
                }
            }
        }
    }
    let mut binv = match binv {
        Some(b) => b,
        None => lp.basis_inverse(&basis).expect("cold basis is a signed permutation"),
    };
    let mut xb = basic_solution(&binv);

    let max_pivots = 50 * (m + cols.len());
    let mut pivots = 0;
    let mut degenerate_run = 0;
    let mut bland = false;
    let mut since_refactor = 0;
    let mut degraded = false;
    loop {
        // π = c_Bᵀ B⁻¹
        let cb: Vec<S> = basis.iter().map(|&c| lp.cost(c)).collect();
        let pi: Vec<S> = (0..m)
            .map(|i| {
                let mut s = S::zero();
                for r in 0..m {
                    s += cb[r].clone() * binv.get(r, i).clone();
                }
                s
            })
            .collect();

        let mut entering: Option<(ColumnId, S)> = None;
        for &c in &cols {
            if basis.contains(&c) {
                continue;
            }
            let d = lp.reduced_cost(c, &pi);
            if d < -tol_d.clone() {
                if bland {
                    entering = Some((c, d));
                    break;
                }
                if entering.as_ref().is_none_or(|(_, best)| d < *best) {
                    entering = Some((c, d));
                }
            }
        }
        let Some((enter, _)) = entering else { break };
        if pivots >= max_pivots {
            degraded = true;
            break;
        }

        let col = lp.column(enter);
        let alpha: Vec<S> = (0..m)
            .map(|r| {
                let mut s = S::zero();
                for i in 0..m {
                    s += binv.get(r, i).clone() * col[i].clone();
                }
                s
            })
            .collect();
        let piv_tol = S::from_f64(1e-11);
        let mut leave: Option<(usize, S)> = None;
        for r in 0..m {
            if alpha[r] > piv_tol {
                let ratio = xb[r].clone().max_of(S::zero()) / alpha[r].clone();
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => {
                        if ratio < *best {
                            true
                        } else if ratio == *best {
                            if bland {
                                col_rank(basis[r], n) < col_rank(basis[*lr], n)
                            } else {
                                alpha[r] > alpha[*lr]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, step)) = leave else {
            // the dual is bounded, so this is numerical trouble
            degraded = true;
            break;
        };
        if step.is_zero() {
            degenerate_run += 1;
            if degenerate_run > 2 * m {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        // eta update of B⁻¹ and x_B
        let ar = alpha[r].clone();
        for c in 0..m {
            let v = binv.get(r, c).clone() / ar.clone();
            binv.set(r, c, v);
        }
        xb[r] = xb[r].clone() / ar.clone();
        for i in 0..m {
            if i == r || alpha[i].is_zero() {
                continue;
            }
            let f = alpha[i].clone();
            for c in 0..m {
                let v = binv.get(i, c).clone() - f.clone() * binv.get(r, c).clone();
                binv.set(i, c, v);
            }
            xb[i] = xb[i].clone() - f * xb[r].clone();
        }
        basis[r] = enter;
        pivots += 1;
        since_refactor += 1;
        if since_refactor >= 64 {
            if let Some(inv) = lp.basis_inverse(&basis) {
                binv = inv;
                xb = basic_solution(&binv);
            }
            since_refactor = 0;
        }
    }

    let cb: Vec<S> = basis.iter().map(|&c| lp.cost(c)).collect();
    let pi: Vec<S> = (0..m)
        .map(|i| {
            let mut s = S::zero();
            for r in 0..m {
                s += cb[r].clone() * binv.get(r, i).clone();
            }
            s
        })
        .collect();
    // clamp round-off outside the box
    let u: Vec<S> = pi[..n].iter().map(|v| v.clone().max_of(-lp.eps.clone()).min_of(lp.eps.clone())).collect();
    let z: Vec<S> = x.iter().zip(&u).map(|(a, b)| a.clone() + b.clone()).collect();
    let theta = -pi[n].clone();
    let boundary_active = tr.on_boundary(&z, opts.tol_bnd);

    let mut lam: Vec<(usize, S)> = basis
        .iter()
        .zip(&xb)
        .filter_map(|(c, v)| match c {
            ColumnId::Lambda(k) if *v > S::zero() => Some((*k, v.clone())),
            _ => None,
        })
        .collect();
    lam.sort_by_key(|(k, _)| *k);
    let total = lam.iter().fold(S::zero(), |s, (_, v)| s + v.clone());
    let multipliers = if total > S::zero() {
        Some(lam.into_iter().map(|(k, v)| (k, v / total.clone())).collect())
    } else {
        None
    };

    Ok(SubproblemSolution {
        z,
        theta,
        boundary_active,
        multipliers,
        stats: SolveStats { starts: 1, inner_iterations: pivots, stages: 0 },
        degraded,
        lp_basis: Some(basis),
    })
}

/// Fixed column order for Bland's rule.
fn col_rank(c: ColumnId, n: usize) -> usize {
    match c {
        ColumnId::Mu(i) => i,
        ColumnId::Nu(i) => n + i,
        ColumnId::Lambda(k) => 2 * n + k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::model_eval;
    use crate::rng::Stream;
    use crate::subproblem::tests::affine_cut;
    use crate::subproblem::TrustRegion;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn separable_single_cut() {
        let g = vec![1.0, -2.0, 0.5];
        let mut w = Bundle::new(TrustRegion::new(vec![0.0; 3], 0.1, Norm::Max));
        w.push(affine_cut(vec![0.0; 3], 1.0, g)).unwrap();
        let s = solve_lp_q1(&w, &opts(), None).unwrap();
        assert_eq!(s.z, vec![-0.1, 0.1, -0.1]);
        assert!((s.theta - (1.0 - 0.1 * 3.5)).abs() < 1e-15);
        assert!(s.boundary_active);
        assert_eq!(s.multipliers.unwrap(), vec![(0, 1.0)]);
    }

    #[test]
    fn opposing_cuts_on_interval() {
        let mut w = Bundle::new(TrustRegion::new(vec![0.0], 1.0, Norm::Max));
        w.push(affine_cut(vec![0.5], 0.5, vec![1.0])).unwrap();
        w.push(affine_cut(vec![-0.5], 0.5, vec![-1.0])).unwrap();
        let s = solve_lp_q1(&w, &opts(), None).unwrap();
        assert!(s.theta.abs() < 1e-15 && s.z[0].abs() < 1e-15);
        assert!(!s.boundary_active);
        let m = s.multipliers.unwrap();
        assert!((m[0].1 - 0.5).abs() < 1e-15 && (m[1].1 - 0.5).abs() < 1e-15);
    }

    /// Enumerate every vertex of `{(u, θ)}` formed by n+1 tight constraints
    /// among cut rows and box faces, keep the feasible ones, return min θ.
    fn brute_force(w: &Bundle<f64>) -> f64 {
        let n = w.dim();
        let x = &w.region().center;
        let eps = w.region().radius;
        let k = w.len();
        let a: Vec<f64> = w.cut_values(x);
        let g: Vec<Vec<f64>> = w.compiled().iter().map(|c| c.gradient(x)).collect();
        // rows: cut k: g_kᵀu − θ = −a_k ; box: ±u_i = ε
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for j in 0..k {
            let mut r = g[j].clone();
            r.push(-1.0);
            rows.push((r, -a[j]));
        }
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut r = vec![0.0; n + 1];
                r[i] = s;
                rows.push((r, eps));
            }
        }
        let mut best = f64::INFINITY;
        let total = rows.len();
        let mut idx: Vec<usize> = (0..=n).collect();
        loop {
            let m = Mat::from_rows(&idx.iter().map(|&i| rows[i].0.clone()).collect::<Vec<_>>());
            let b: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
            if let Some(sol) = crate::linalg::solve(&m, &b) {
                let (u, th) = (&sol[..n], sol[n]);
                let feas = u.iter().all(|v| v.abs() <= eps * (1.0 + 1e-9))
                    && (0..k).all(|j| a[j] + dot(&g[j], u) <= th + 1e-9);
                if feas {
                    best = best.min(th);
                }
            }
            // next combination
            let mut i = n + 1;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if idx[i] < total - (n + 1 - i) {
                    idx[i] += 1;
                    for j in i + 1..=n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn matches_vertex_enumeration_in_five_dimensions() {
        let mut rng = Stream::new(11);
        for _ in 0..10 {
            let x: Vec<f64> = rng.normal_vec(5);
            let mut w = Bundle::new(TrustRegion::new(x.clone(), 0.7, Norm::Max));
            for _ in 0..3 {
                let y: Vec<f64> = x.iter().zip(rng.unit_box(5)).map(|(a, b)| a + 0.7 * b).collect();
                w.push(affine_cut(y, rng.normal(), rng.normal_vec(5))).unwrap();
            }
            let s = solve_lp_q1(&w, &opts(), None).unwrap();
            let bf = brute_force(&w);
            assert!((s.theta - bf).abs() < 1e-10, "{} vs {bf}", s.theta);
            assert!((model_eval(&w, &s.z).unwrap().0 - s.theta).abs() < 1e-10);
        }
    }

    #[test]
    fn warm_start_reaches_the_same_optimum() {
        let mut rng = Stream::new(5);
        let n = 20;
        let x = vec![0.0; n];
        let mut w = Bundle::new(TrustRegion::new(x.clone(), 1.0, Norm::Max));
        let mut basis: Option<Vec<ColumnId>> = None;
        for _ in 0..15 {
            let y: Vec<f64> = rng.unit_box(n);
            w.push(affine_cut(y, rng.normal(), rng.normal_vec(n))).unwrap();
            let cold = solve_lp_q1(&w, &opts(), None).unwrap();
            let warm = solve_lp_q1(&w, &opts(), basis.as_deref()).unwrap();
            assert!((cold.theta - warm.theta).abs() < 1e-12);
            assert!(warm.stats.inner_iterations <= cold.stats.inner_iterations + n);
            basis = warm.lp_basis;
        }
    }

    #[test]
    fn multipliers_satisfy_stationarity_when_interior() {
        // three cuts in 2-D whose max has a strict minimum inside the box
        let mut w = Bundle::new(TrustRegion::new(vec![0.0, 0.0], 1.0, Norm::Max));
        // cuts through the origin, expanded at distinct centers
        w.push(affine_cut(vec![0.1, 0.0], 0.1, vec![1.0, 0.0])).unwrap();
        w.push(affine_cut(vec![0.0, 0.1], 0.1, vec![-1.0, 1.0])).unwrap();
        w.push(affine_cut(vec![0.0, -0.1], 0.2, vec![-1.0, -2.0])).unwrap();
        let s = solve_lp_q1(&w, &opts(), None).unwrap();
        assert!(!s.boundary_active);
        let m = s.multipliers.unwrap();
        let mut r = [0.0; 2];
        for (k, l) in &m {
            let g = w.cuts()[*k].jet.gradient_at_center();
            r[0] += l * g[0];
            r[1] += l * g[1];
        }
        assert!(r[0].abs() < 1e-14 && r[1].abs() < 1e-14);
    }
}
