use super::{check_query, OracleResponse, Problem, ProblemError, ProblemMeta, SelectionCount};
use crate::scalar::Scalar;
use crate::taylor::{SymTensor, TaylorJet};

/// `f(x) = max_i sqrt(|x_i| + 1/4) − 1/2`.
#[derive(Clone, Debug)]
pub struct MaxRoot {
    n: usize,
}

pub const MAXROOT_MAX_ORDER: usize = 8;

impl MaxRoot {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "maxroot needs n >= 1");
        MaxRoot { n }
    }

    /// Active coordinate (smallest index on ties) and its branch sign.
    fn select<S: Scalar>(x: &[S]) -> (usize, S) {
        let mut best = 0;
        for i in 1..x.len() {
            if x[i].abs() > x[best].abs() {
                best = i;
            }
        }
        (best, x[best].sign_nonneg())
    }
}

/// `sqrt(t + 1/4) − 1/2` written so that small `t` keeps full relative accuracy.
fn root_branch<S: Scalar>(t: &S) -> S {
    let quarter = S::from_f64(0.25);
    let half = S::from_f64(0.5);
    t.clone() / ((t.clone() + quarter).sqrt() + half)
}

impl<S: Scalar> Problem<S> for MaxRoot {
    fn name(&self) -> String {
        "maxroot".into()
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[S]) -> S {
        let (i, _) = Self::select(x);
        root_branch(&x[i].abs())
    }

    fn oracle(&self, x: &[S], q: usize) -> Result<OracleResponse<S>, ProblemError> {
        check_query("maxroot", self.n, MAXROOT_MAX_ORDER, x, q)?;
        let (i, s) = Self::select(x);
        let t = s.clone() * x[i].clone();
        let value = root_branch(&t);
        let base = t + S::from_f64(0.25);
        let r = base.sqrt();
        let mut tensors = vec![SymTensor::constant(value.clone(), self.n)];
        // d^m/dt^m sqrt(t + 1/4) = c_m (t + 1/4)^(1/2 − m), c_m = ∏_{k<m} (1/2 − k)
        let mut c = S::one();
        let mut pow = S::one();
        let mut sm = S::one();
        for m in 1..=q {
            c *= S::from_f64(0.5 - (m - 1) as f64);
            pow *= base.clone();
            sm *= s.clone();
            let d = sm.clone() * c.clone() * r.clone() / pow.clone();
            tensors.push(SymTensor::from_fn(m, self.n, |idx| {
                if idx.iter().all(|&k| k == i) {
                    d.clone()
                } else {
                    S::zero()
                }
            }));
        }
        // ties between coordinates mark a kink
        let flagged = x.iter().enumerate().any(|(k, v)| k != i && v.abs() == x[i].abs()) || x[i].is_zero();
        Ok(OracleResponse { value, jet: TaylorJet::new(x.to_vec(), tensors)?, flagged })
    }

    fn max_order(&self) -> usize {
        MAXROOT_MAX_ORDER
    }

    fn meta(&self) -> ProblemMeta<S> {
        ProblemMeta {
            minimizer: Some(vec![S::zero(); self.n]),
            optimal_value: Some(S::zero()),
            growth_order: 1,
            selections: SelectionCount::Finite(2 * self.n),
            minimizer_is_self_referential: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_difference_check;
    use crate::taylor::jet_eval;

    #[test]
    fn values_and_branch_choice() {
        let p = MaxRoot::new(1);
        let v: f64 = p.value(&[0.1]);
        assert!((v - (0.35f64.sqrt() - 0.5)).abs() < 1e-16);
        assert!((v - 0.0916080).abs() < 1e-7);
        let r = p.oracle(&[0.0], 1).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.jet.tensors[1].as_vector(), vec![1.0]);
        let p2 = MaxRoot::new(2);
        let r2 = Problem::<f64>::oracle(&p2, &[0.3, -0.4], 1).unwrap();
        assert!((r2.value - (0.65f64.sqrt() - 0.5)).abs() < 1e-15);
        let g = r2.jet.tensors[1].as_vector();
        assert_eq!(g[0], 0.0);
        assert!(g[1] < 0.0);
    }

    #[test]
    fn cubic_jet_matches_closed_form_taylor() {
        // hand derivatives of sqrt(t + 1/4) − 1/2 at t = 0.1
        let p = MaxRoot::new(1);
        let r = Problem::<f64>::oracle(&p, &[0.1], 3).unwrap();
        let a: f64 = 0.35;
        let d1 = 0.5 * a.powf(-0.5);
        let d2 = -0.25 * a.powf(-1.5);
        let d3 = 0.375 * a.powf(-2.5);
        for k in 0..10 {
            let z = -0.05 + 0.03 * k as f64;
            let h = z - 0.1;
            let expect = (a.sqrt() - 0.5) + d1 * h + d2 * h * h / 2.0 + d3 * h * h * h / 6.0;
            assert!((jet_eval(&r.jet, &[z]).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = MaxRoot::new(3);
        let rep = finite_difference_check::<f64>(&p, &[0.2, 0.1, 0.05], 2, 1e-6).unwrap();
        assert!(rep.errors[0] <= 1e-6, "{rep:?}");
        assert!(rep.errors[1] <= 1e-5, "{rep:?}");
    }
}
