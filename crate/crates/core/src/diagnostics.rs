//! Criticality and convergence-rate instrumentation.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{solve, Mat};
use crate::model::Bundle;
use crate::scalar::{dot, Scalar};
use crate::schedule::EpsSchedule;

/// Minimum-norm point of the convex hull of `points` (Wolfe's method).
///
/// Returns the point and its convex weights.
pub fn min_norm_convex_hull<S: Scalar>(points: &[Vec<S>], tol: &S) -> (Vec<S>, Vec<S>) {
    assert!(!points.is_empty(), "min_norm_convex_hull needs a point");
    let k = points.len();
    let n = points[0].len();
    let combine = |w: &[S], set: &[usize]| -> Vec<S> {
        let mut v = vec![S::zero(); n];
        for (wi, &i) in w.iter().zip(set) {
            for (vj, pj) in v.iter_mut().zip(&points[i]) {
                *vj += wi.clone() * pj.clone();
            }
        }
        v
    };
    let scale = points.iter().map(|p| dot(p, p)).fold(S::zero(), |a, b| a.max_of(b));
    if scale.is_zero() {
        let mut w = vec![S::zero(); k];
        w[0] = S::one();
        return (vec![S::zero(); n], w);
    }
    let start = (0..k).min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp_nonnan(&dot(&points[b], &points[b]))).unwrap();
    let mut set = vec![start];
    let mut w = vec![S::one()];
    let mut x = points[start].clone();
    let small = S::epsilon() * S::from_f64(1e3);
    for _major in 0..(50 + 20 * k) {
        let xx = dot(&x, &x);
        let (j, xj) = (0..k)
            .map(|j| (j, dot(&x, &points[j])))
            .min_by(|a, b| a.1.total_cmp_nonnan(&b.1))
            .unwrap();
        if xj >= xx.clone() - tol.clone() * scale.clone() || set.contains(&j) {
            break;
        }
        set.push(j);
        w.push(S::zero());
        for _minor in 0..(10 * k + 10) {
            let alpha = match affine_minimizer(points, &set, &scale) {
                Some(a) => a,
                None => break,
            };
            if alpha.iter().all(|a| *a > small) {
                w = alpha;
                break;
            }
            // move from w toward alpha until a weight hits zero
            let mut theta = S::one();
            for (wi, ai) in w.iter().zip(&alpha) {
                if *ai <= small {
                    let d = wi.clone() - ai.clone();
                    if d > S::zero() {
                        theta = theta.min_of(wi.clone() / d);
                    }
                }
            }
            for (wi, ai) in w.iter_mut().zip(&alpha) {
                *wi = wi.clone() + theta.clone() * (ai.clone() - wi.clone());
            }
            let mut keep_set = Vec::new();
            let mut keep_w = Vec::new();
            for (wi, &i) in w.iter().zip(&set) {
                if *wi > small {
                    keep_set.push(i);
                    keep_w.push(wi.clone());
                }
            }
            if keep_set.is_empty() {
                break;
            }
            set = keep_set;
            w = keep_w;
        }
        let total = w.iter().fold(S::zero(), |a, b| a + b.clone());
        for wi in w.iter_mut() {
            *wi = wi.clone() / total.clone();
        }
        x = combine(&w, &set);
    }
    let mut full = vec![S::zero(); k];
    for (wi, &i) in w.iter().zip(&set) {
        full[i] = wi.clone();
    }
    (x, full)
}

/// Weights `α` with `Σα = 1` minimizing `‖Σ α_i p_i‖` over the affine hull.
fn affine_minimizer<S: Scalar>(points: &[Vec<S>], set: &[usize], scale: &S) -> Option<Vec<S>> {
    let m = set.len();
    let build = |ridge: &S| {
        let mut a = Mat::<S>::zeros(m + 1);
        for (r, &i) in set.iter().enumerate() {
            for (c, &j) in set.iter().enumerate() {
                let mut v = dot(&points[i], &points[j]);
                if r == c {
                    v += ridge.clone();
                }
                a.set(r, c, v);
            }
            a.set(r, m, S::one());
            a.set(m, r, S::one());
        }
        a
    };
    let mut rhs = vec![S::zero(); m + 1];
    rhs[m] = S::one();
    if let Some(sol) = solve(&build(&S::zero()), &rhs) {
        return Some(sol[..m].to_vec());
    }
    let ridge = scale.clone() * S::epsilon() * S::from_f64(1e4);
    solve(&build(&ridge), &rhs).map(|s| s[..m].to_vec())
}

/// Norm of the min-norm element of the hull of the bundle's center gradients.
pub fn criticality_measure<S: Scalar>(bundle: &Bundle<S>, tol: &S) -> S {
    let grads: Vec<Vec<S>> = bundle.cuts().iter().map(|c| c.jet.gradient_at_center()).collect();
    let (v, _) = min_norm_convex_hull(&grads, tol);
    crate::scalar::norm2(&v)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("need at least {need} usable distances, got {got}")]
    TooFewPoints { need: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    /// `(j, d_j, ε_j, d_j ≤ ε_j)`
    pub rows: Vec<(usize, f64, f64, bool)>,
    /// First index from which every later row passes (`None` if the last fails).
    pub j0: Option<usize>,
    pub violations: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub distances: Vec<f64>,
    pub envelope: EnvelopeCheck,
    /// Least-squares slope of `log e_j` against `j`, where
    /// `e_j = log(d_j/ε₁)/log κ + 1` puts distances on the schedule's
    /// exponent scale; equals `log Q` exactly when `d_j = ε_j`.
    pub fitted_slope: Option<f64>,
    /// `exp(fitted_slope)`, an estimate of the R-order.
    pub fitted_order: Option<f64>,
    /// Slope of `log(−log d_j)` against `j`.
    pub loglog_slope: Option<f64>,
    /// `log d_{j+1} / log d_j` for consecutive usable pairs.
    pub nstep_ratios: Vec<f64>,
    pub schedule_log_order: f64,
}

/// Envelope test `d_j ≤ ε_j` for the given 1-based rows.
pub fn envelope_check<S: Scalar>(rows: &[(usize, S)], schedule: &EpsSchedule<S>) -> EnvelopeCheck {
    let mut out = Vec::new();
    for (j, d) in rows {
        let e = schedule.eps_at(*j);
        out.push((*j, d.to_f64(), e.to_f64(), *d <= e));
    }
    let violations: Vec<usize> = out.iter().filter(|r| !r.3).map(|r| r.0).collect();
    let j0 = match out.last() {
        Some(last) if last.3 => {
            let mut j0 = last.0;
            for r in out.iter().rev() {
                if r.3 {
                    j0 = r.0;
                } else {
                    break;
                }
            }
            Some(j0)
        }
        _ => None,
    };
    EnvelopeCheck { rows: out, j0, violations }
}

fn ls_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Convergence-rate summary for distances `d_1, d_2, ...` (1-based `j`).
///
/// Logarithms are taken in the active backend, so distances far below the
/// binary64 range remain usable.
pub fn estimate_r_order<S: Scalar>(distances: &[S], schedule: &EpsSchedule<S>) -> Result<RateReport, RateError> {
    let usable: Vec<(usize, S)> =
        distances.iter().enumerate().filter(|(_, d)| **d > S::zero() && d.is_finite()).map(|(i, d)| (i + 1, d.clone())).collect();
    if usable.len() < 4 {
        return Err(RateError::TooFewPoints { need: 4, got: usable.len() });
    }
    let envelope = envelope_check(&usable, schedule);
    let log_k = schedule.kappa.ln();
    let log_e1 = schedule.eps1.ln();
    let mut scaled = Vec::new();
    let mut loglog = Vec::new();
    for (j, d) in &usable {
        let ld = d.ln();
        let e = (ld.clone() - log_e1.clone()) / log_k.clone() + S::one();
        if e > S::zero() {
            scaled.push((*j as f64, e.ln().to_f64()));
        }
        if ld < S::zero() {
            loglog.push((*j as f64, (-ld).ln().to_f64()));
        }
    }
    let mut ratios = Vec::new();
    for w in usable.windows(2) {
        if w[0].0 + 1 == w[1].0 {
            let a = w[0].1.ln();
            if !a.is_zero() {
                ratios.push((w[1].1.ln() / a).to_f64());
            }
        }
    }
    let fitted = ls_slope(&scaled);
    Ok(RateReport {
        distances: distances.iter().map(|d| d.to_f64()).collect(),
        envelope,
        fitted_slope: fitted,
        fitted_order: fitted.map(f64::exp),
        loglog_slope: ls_slope(&loglog),
        nstep_ratios: ratios,
        schedule_log_order: schedule.order().to_f64().ln(),
    })
}

/// Check `‖x^j − x^J‖ ≤ C ε_j` for every recorded iterate, with `x^J` the last.
/// Returns the violating indices (1-based).
pub fn cauchy_envelope_violations<S: Scalar>(
    iterates: &[Vec<S>],
    schedule: &EpsSchedule<S>,
    norm: impl Fn(&[S]) -> S,
) -> Vec<usize> {
    let c = S::from_f64(schedule.cauchy_constant());
    let last = match iterates.last() {
        Some(l) => l,
        None => return Vec::new(),
    };
    let mut out = Vec::new();
    for (i, x) in iterates.iter().enumerate() {
        let d = norm(&crate::scalar::sub_vec(x, last));
        if d > c.clone() * schedule.eps_at(i + 1) {
            out.push(i + 1);
        }
    }
    out
}
