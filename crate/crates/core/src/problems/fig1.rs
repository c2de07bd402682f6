use super::{check_query, OracleResponse, Problem, ProblemError, ProblemMeta, SelectionCount};
use crate::scalar::Scalar;
use crate::taylor::{SymTensor, TaylorJet};

/// One-dimensional max of three branches:
///
/// * `−(x+0.5)² + 0.25|x|^{3/2} + 0.5`
/// * `x² + 0.5|x|^{3/2} − 0.25`
/// * `−1/(|x|+0.25) + 2`
#[derive(Clone, Debug, Default)]
pub struct Fig1;

pub const FIG1_MAX_ORDER: usize = 8;

impl Fig1 {
    pub fn new() -> Self {
        Fig1
    }

    /// Values of the three branches.
    pub fn branches<S: Scalar>(x: &S) -> [S; 3] {
        let a = x.abs();
        let a32 = a.clone() * a.sqrt();
        let half = S::from_f64(0.5);
        let quarter = S::from_f64(0.25);
        let xp = x.clone() + half.clone();
        [
            -(xp.clone() * xp) + quarter.clone() * a32.clone() + half.clone(),
            x.clone() * x.clone() + half * a32 - quarter.clone(),
            S::from_f64(2.0) - S::one() / (a + quarter),
        ]
    }

    /// Index of the attaining branch, first in listed order on ties.
    pub fn active_branch<S: Scalar>(x: &S) -> usize {
        let b = Self::branches(x);
        let mut k = 0;
        for i in 1..3 {
            if b[i] > b[k] {
                k = i;
            }
        }
        k
    }
}

/// Derivatives of `t ↦ t^{3/2}` for `t > 0`, orders `0..=q`.
fn pow32_derivs<S: Scalar>(t: &S, q: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(q + 1);
    let mut c = S::one();
    let st = t.sqrt();
    for m in 0..=q {
        if m > 0 {
            c *= S::from_f64(1.5 - (m - 1) as f64);
        }
        // t^{3/2 − m} = t·sqrt(t) / t^m
        out.push(c.clone() * t.clone() * st.clone() / t.powi(m as i32));
    }
    out
}

impl<S: Scalar> Problem<S> for Fig1 {
    fn name(&self) -> String {
        "fig1".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[S]) -> S {
        let b = Self::branches(&x[0]);
        b[Self::active_branch(&x[0])].clone()
    }

    fn oracle(&self, x: &[S], q: usize) -> Result<OracleResponse<S>, ProblemError> {
        check_query("fig1", 1, FIG1_MAX_ORDER, x, q)?;
        let xv = x[0].clone();
        let k = Self::active_branch(&xv);
        let branches = Self::branches(&xv);
        let value = branches[k].clone();
        let sgn = xv.sign_nonneg();
        let t = xv.abs();
        let at_kink = t.is_zero();
        let ties = branches.iter().enumerate().any(|(i, b)| i != k && *b == value);
        let mut flagged = ties;
        // d^m/dx^m of g(σx) is σ^m g^{(m)}(t)
        let mut d = vec![S::zero(); q + 1];
        d[0] = value.clone();
        let p32: Vec<S> = if at_kink {
            // t^{3/2} and its first derivative vanish at 0; higher ones blow up and are zeroed
            if q >= 2 && k < 2 {
                flagged = true;
            }
            vec![S::zero(); q + 1]
        } else {
            pow32_derivs(&t, q)
        };
        // polynomial parts are in x; the |x|-dependent parts pick up σ^m
        let mut sm = S::one();
        for m in 1..=q {
            sm *= sgn.clone();
            let poly = match (k, m) {
                (0, 1) => -S::from_f64(2.0) * (xv.clone() + S::from_f64(0.5)),
                (0, 2) => -S::from_f64(2.0),
                (1, 1) => S::from_f64(2.0) * xv.clone(),
                (1, 2) => S::from_f64(2.0),
                _ => S::zero(),
            };
            let in_t = match k {
                0 => S::from_f64(0.25) * p32[m].clone(),
                1 => S::from_f64(0.5) * p32[m].clone(),
                _ => {
                    // m-th derivative of −(t + 1/4)^{-1} is −(−1)^m m! (t + 1/4)^{−1−m}
                    let base = t.clone() + S::from_f64(0.25);
                    let sign = if m % 2 == 0 { -S::one() } else { S::one() };
                    sign * crate::taylor::factorial::<S>(m) / base.powi(m as i32 + 1)
                }
            };
            d[m] = sm.clone() * in_t + poly;
        }
        let tensors = d.iter().enumerate().map(|(m, v)| SymTensor::from_fn(m, 1, |_| v.clone())).collect();
        Ok(OracleResponse { value, jet: TaylorJet::new(x.to_vec(), tensors)?, flagged })
    }

    fn max_order(&self) -> usize {
        FIG1_MAX_ORDER
    }

    fn meta(&self) -> ProblemMeta<S> {
        ProblemMeta {
            minimizer: None,
            optimal_value: None,
            growth_order: 1,
            selections: SelectionCount::Finite(6),
            minimizer_is_self_referential: false,
        }
    }
}
