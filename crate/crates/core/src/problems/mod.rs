//! The oracle abstraction and the test problems.
//!
//! An oracle call at `x` returns `f(x)` together with the Taylor jet of an
//! attaining smooth branch at `x`. Which branch was used is not reported.

mod fig1;
mod halfhalf;
pub mod instance;
mod maxeig;
mod maxroot;
mod sumabs;

pub use fig1::Fig1;
pub use halfhalf::HalfHalf;
pub use maxeig::{generate_maxeig_instance, MaxEig, MaxEigInstance};
pub use maxroot::MaxRoot;
pub use sumabs::{generate_sumabs_instance, SumAbs, SumAbsInstance};

use thiserror::Error;

use crate::scalar::{norm_inf, Scalar};
use crate::taylor::{TaylorError, TaylorJet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("{problem} supports derivative order at most {max}, requested {requested}")]
    OrderTooHigh { problem: String, requested: usize, max: usize },
    #[error("point has dimension {got}, problem has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Taylor(#[from] TaylorError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResponse<S> {
    pub value: S,
    pub jet: TaylorJet<S>,
    /// Set when the query point is (numerically) a kink, so the jet is only
    /// a best-effort branch expansion.
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SelectionCount {
    Finite(usize),
    Infinite,
}

impl SelectionCount {
    pub fn finite(&self) -> Option<usize> {
        match self {
            SelectionCount::Finite(k) => Some(*k),
            SelectionCount::Infinite => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemMeta<S> {
    pub minimizer: Option<Vec<S>>,
    pub optimal_value: Option<S>,
    /// Declared order of growth around the minimizer.
    pub growth_order: u32,
    pub selections: SelectionCount,
    /// The stored minimizer came from a long run of this library rather than
    /// from a closed form.
    pub minimizer_is_self_referential: bool,
}

pub trait Problem<S: Scalar>: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn value(&self, x: &[S]) -> S;
    fn oracle(&self, x: &[S], q: usize) -> Result<OracleResponse<S>, ProblemError>;
    fn max_order(&self) -> usize;
    fn meta(&self) -> ProblemMeta<S>;

    fn is_smooth_at(&self, x: &[S]) -> bool {
        self.oracle(x, 1).map(|r| !r.flagged).unwrap_or(false)
    }
}

pub(crate) fn check_query<S: Scalar>(
    name: &str,
    dim: usize,
    max_order: usize,
    x: &[S],
    q: usize,
) -> Result<(), ProblemError> {
    if x.len() != dim {
        return Err(ProblemError::DimensionMismatch { expected: dim, got: x.len() });
    }
    if q > max_order {
        return Err(ProblemError::OrderTooHigh { problem: name.to_string(), requested: q, max: max_order });
    }
    Ok(())
}

/// Per-order discrepancy between oracle tensors and finite differences.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FdReport {
    /// `errors[k]` belongs to derivative order `k + 1`.
    pub errors: Vec<f64>,
    pub flagged: bool,
}

impl FdReport {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Compare oracle derivatives of orders `1..=min(q,2)` with central
/// differences of the objective value.
///
/// The error of order `k` is `‖fd − exact‖_∞ / max(1, ‖exact‖_∞)`. Order 1 uses
/// step `h`; order 2 uses `max(h, 1e-4)` since second differences of values
/// lose twice as many digits.
pub fn finite_difference_check<S: Scalar>(
    problem: &dyn Problem<S>,
    x: &[S],
    q: usize,
    h: f64,
) -> Result<FdReport, ProblemError> {
    let q = q.min(2).min(problem.max_order());
    let resp = problem.oracle(x, q)?;
    let n = x.len();
    let mut errors = Vec::new();
    let shifted = |pairs: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, d) in pairs {
            y[i] += S::from_f64(d);
        }
        problem.value(&y)
    };
    if q >= 1 {
        let exact = resp.jet.tensors[1].as_vector();
        let two_h = S::from_f64(2.0 * h);
        let fd: Vec<S> = (0..n).map(|i| (shifted(&[(i, h)]) - shifted(&[(i, -h)])) / two_h.clone()).collect();
        errors.push(rel_err(&fd, &exact));
    }
    if q >= 2 {
        let h2 = h.max(1e-4);
        let exact = resp.jet.tensors[2].as_matrix();
        let denom = S::from_f64(4.0 * h2 * h2);
        let mut fd = vec![S::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    let f0 = problem.value(x);
                    (shifted(&[(i, 2.0 * h2)]) - f0.clone() - f0 + shifted(&[(i, -2.0 * h2)])) / denom.clone()
                } else {
                    (shifted(&[(i, h2), (j, h2)]) - shifted(&[(i, h2), (j, -h2)]) - shifted(&[(i, -h2), (j, h2)])
                        + shifted(&[(i, -h2), (j, -h2)]))
                        / denom.clone()
                };
                fd[i * n + j] = v.clone();
                fd[j * n + i] = v;
            }
        }
        errors.push(rel_err(&fd, &exact));
    }
    Ok(FdReport { errors, flagged: resp.flagged })
}

fn rel_err<S: Scalar>(fd: &[S], exact: &[S]) -> f64 {
    let diff: Vec<S> = fd.iter().zip(exact).map(|(a, b)| a.clone() - b.clone()).collect();
    norm_inf(&diff).to_f64() / norm_inf(exact).to_f64().max(1.0)
}

/// Names accepted by the configuration layer.
pub const PROBLEM_NAMES: [(&str, &str); 5] = [
    ("maxroot", "max_i sqrt(|x_i| + 1/4) - 1/2, finite max-type, sharp minimum at 0"),
    ("sumabs", "sum of absolute values of quartic terms, random instance, quadratic growth at 0"),
    ("maxeig", "largest eigenvalue of an affine matrix family, random instance"),
    ("halfhalf", "sqrt(xᵀAx) + xᵀBx in dimension 8"),
    ("fig1", "one-dimensional three-branch max function used for model pictures"),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_problem_has_zero_fd_error() {
        let n = 3;
        let m = 2;
        let mut a = vec![vec![0.0; m * m]; n + 1];
        a[0] = vec![3.0, 0.0, 0.0, 1.0];
        let p = MaxEig::<f64>::new(&MaxEigInstance { seed: 0, n, m, a, reference: None }).unwrap();
        let rep = finite_difference_check(&p, &[0.2, -0.1, 0.4], 2, 1e-5).unwrap();
        assert!(rep.max_error() <= 1e-9, "{rep:?}");
    }
}
