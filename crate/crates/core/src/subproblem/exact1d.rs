use crate::model::{active_cuts, Bundle};
use crate::poly::{poly_roots_in_interval, Poly1D};
use crate::scalar::Scalar;
use crate::taylor::jet_restrict_1d_about;

use super::{hull_weights, SolveStats, SolverOptions, SubproblemError, SubproblemSolution};

/// Enumerate endpoints, cut critical points and pairwise crossings; keep
/// the leftmost candidate with the least model value.
pub fn solve_exact_1d<S: Scalar>(w: &Bundle<S>, opts: &SolverOptions) -> Result<SubproblemSolution<S>, SubproblemError> {
    if w.is_empty() {
        return Err(SubproblemError::EmptyBundle);
    }
    if w.dim() != 1 {
        return Err(SubproblemError::Incompatible { strategy: "exact1d", reason: format!("dimension {} ≠ 1", w.dim()) });
    }
    let tr = w.region();
    let x = tr.center[0].clone();
    let eps = tr.radius.clone();
    let polys: Vec<Poly1D<S>> =
        w.cuts().iter().map(|c| jet_restrict_1d_about(&c.jet, &x).expect("univariate bundle")).collect();

    let lo = -eps.clone();
    let hi = eps.clone();
    let root_tol = eps.clone() * S::epsilon() * S::from_f64(64.0);
    let mut cand = vec![lo.clone(), S::zero(), hi.clone()];
    let add_roots = |p: &Poly1D<S>, cand: &mut Vec<S>| {
        if p.degree().unwrap_or(0) >= 1 {
            if let Ok(r) = poly_roots_in_interval(p, &lo, &hi, &root_tol) {
                cand.extend(r);
            }
        }
    };
    for p in &polys {
        add_roots(&p.derivative(), &mut cand);
    }
    for a in 0..polys.len() {
        for b in a + 1..polys.len() {
            add_roots(&polys[a].sub(&polys[b]), &mut cand);
        }
    }
    cand.sort_by(|a, b| a.total_cmp_nonnan(b));

    let model = |u: &S| polys.iter().map(|p| p.eval(u)).fold(None, |m: Option<S>, v| Some(m.map_or(v.clone(), |m| m.max_of(v)))).unwrap();
    let mut best_u = cand[0].clone();
    let mut best = model(&best_u);
    for u in &cand[1..] {
        let v = model(u);
        if v < best {
            best = v;
            best_u = u.clone();
        }
    }

    let z = vec![x + best_u.clone()];
    let boundary_active = best_u.abs() >= eps * S::from_f64(1.0 - opts.tol_bnd);
    let multipliers = if boundary_active {
        None
    } else {
        let act = active_cuts(w, &z, &S::from_f64(opts.tol_act));
        Some(hull_weights(w, &act, &z))
    };
    Ok(SubproblemSolution {
        z,
        theta: best,
        boundary_active,
        multipliers,
        stats: SolveStats { starts: cand.len(), inner_iterations: 0, stages: 0 },
        degraded: false,
        lp_basis: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_eval, Cut};
    use crate::problems::{Fig1, MaxRoot, Problem};
    use crate::scalar::BigFloat;
    use crate::subproblem::{Norm, TrustRegion};
    use crate::subproblem::tests::{affine_cut, quad_cut};

    #[test]
    fn quadratic_interior_critical_point() {
        let mut w = Bundle::new(TrustRegion::new(vec![0.1], 0.5, Norm::Euclidean));
        w.push(quad_cut(vec![0.0], 0.0, vec![0.0], vec![2.0])).unwrap();
        let s = solve_exact_1d(&w, &SolverOptions::default()).unwrap();
        assert!(s.z[0].abs() < 1e-13);
        assert!(!s.boundary_active);
    }

    #[test]
    fn symmetric_crossing() {
        let mut w = Bundle::new(TrustRegion::new(vec![0.0], 1.0, Norm::Euclidean));
        w.push(affine_cut(vec![0.5], 0.5, vec![1.0])).unwrap();
        w.push(affine_cut(vec![-0.5], 0.5, vec![-1.0])).unwrap();
        let s = solve_exact_1d(&w, &SolverOptions::default()).unwrap();
        assert!(s.z[0].abs() < 1e-15 && s.theta.abs() < 1e-15);
        let m = s.multipliers.unwrap();
        assert!((m[0].1 - 0.5).abs() < 1e-12 && (m[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flat_model_ties_go_left() {
        let mut w = Bundle::new(TrustRegion::new(vec![0.0], 1.0, Norm::Euclidean));
        w.push(affine_cut(vec![0.0], 2.0, vec![0.0])).unwrap();
        let s = solve_exact_1d(&w, &SolverOptions::default()).unwrap();
        assert_eq!(s.z[0], -1.0);
    }

    #[test]
    fn maxroot_two_quadratic_cuts_match_grid_scan() {
        let p = MaxRoot::new(1);
        let x = 0.1;
        let eps = 0.5;
        let mut w = Bundle::new(TrustRegion::new(vec![x], eps, Norm::Euclidean));
        w.push(Cut::from_response(p.oracle(&[x], 2).unwrap())).unwrap();
        let s1 = solve_exact_1d(&w, &SolverOptions::default()).unwrap();
        w.push(Cut::from_response(p.oracle(&s1.z, 2).unwrap())).unwrap();
        let s = solve_exact_1d(&w, &SolverOptions::default()).unwrap();
        let n = 1_000_000;
        let mut grid_best = f64::INFINITY;
        for k in 0..=n {
            let z = x - eps + 2.0 * eps * k as f64 / n as f64;
            grid_best = grid_best.min(model_eval(&w, &[z]).unwrap().0);
        }
        // a grid never beats the enumerated minimum and gets within its resolution
        assert!(s.theta <= grid_best + 1e-15);
        assert!(grid_best - s.theta < 1e-6);
    }

    #[test]
    fn fig1_bundle_beats_grid() {
        let p = Fig1::new();
        let mut w = Bundle::new(TrustRegion::new(vec![0.0], 1.5, Norm::Euclidean));
        for y in [-1.2, -0.9, -0.3, 0.75, 1.25] {
            w.push(Cut::from_response(p.oracle(&[y], 3).unwrap())).unwrap();
        }
        let s = solve_exact_1d(&w, &SolverOptions::default()).unwrap();
        for k in 0..=30_000 {
            let z = -1.5 + 3.0 * k as f64 / 30_000.0;
            assert!(s.theta <= model_eval(&w, &[z]).unwrap().0 + 1e-12);
        }
    }

    #[test]
    fn extended_precision_tiny_region() {
        type B = BigFloat<512>;
        let p = MaxRoot::new(1);
        let x = B::parse_decimal("1e-40");
        let eps = B::parse_decimal("3e-40");
        let mut w = Bundle::new(TrustRegion::new(vec![x.clone()], eps.clone(), Norm::Euclidean));
        w.push(Cut::from_response(Problem::<B>::oracle(&p, &[x.clone()], 2).unwrap())).unwrap();
        let left = x.clone() - eps;
        w.push(Cut::from_response(Problem::<B>::oracle(&p, &[left], 2).unwrap())).unwrap();
        let s = solve_exact_1d(&w, &SolverOptions::default()).unwrap();
        // the two quadratic cuts cross near the kink at 0
        assert!(s.z[0].abs().to_f64() < 1e-60, "{}", s.z[0]);
    }
}
