use super::{check_query, OracleResponse, Problem, ProblemError, ProblemMeta, SelectionCount};
use crate::scalar::Scalar;
use crate::taylor::{SymTensor, TaylorJet};

/// `f(x) = sqrt(xᵀAx) + xᵀBx` on ℝ⁸ with `A = diag(1,0,1,0,1,0,1,0)` and
/// `B = diag(1/i²)`.
#[derive(Clone, Debug, Default)]
pub struct HalfHalf;

const N: usize = 8;

fn a_diag(i: usize) -> bool {
    i % 2 == 0
}

fn b_diag<S: Scalar>(i: usize) -> S {
    let k = (i + 1) as f64;
    S::one() / S::from_f64(k * k)
}

impl HalfHalf {
    pub fn new() -> Self {
        HalfHalf
    }

    fn parts<S: Scalar>(x: &[S]) -> (S, S) {
        let mut xa = S::zero();
        let mut xb = S::zero();
        for (i, v) in x.iter().enumerate() {
            let v2 = v.clone() * v.clone();
            if a_diag(i) {
                xa += v2.clone();
            }
            xb += b_diag::<S>(i) * v2;
        }
        (xa, xb)
    }
}

impl<S: Scalar> Problem<S> for HalfHalf {
    fn name(&self) -> String {
        "halfhalf".into()
    }

    fn dim(&self) -> usize {
        N
    }

    fn value(&self, x: &[S]) -> S {
        let (xa, xb) = Self::parts(x);
        xa.sqrt() + xb
    }

    fn oracle(&self, x: &[S], q: usize) -> Result<OracleResponse<S>, ProblemError> {
        check_query("halfhalf", N, 2, x, q)?;
        let (xa, xb) = Self::parts(x);
        let smooth = xa > S::zero();
        let s = xa.sqrt();
        let value = s.clone() + xb;
        let mut tensors = vec![SymTensor::constant(value.clone(), N)];
        // Ax
        let ax: Vec<S> = (0..N).map(|i| if a_diag(i) { x[i].clone() } else { S::zero() }).collect();
        if q >= 1 {
            let g: Vec<S> = (0..N)
                .map(|i| {
                    let mut v = S::from_f64(2.0) * b_diag::<S>(i) * x[i].clone();
                    if smooth {
                        v += ax[i].clone() / s.clone();
                    }
                    v
                })
                .collect();
            tensors.push(SymTensor::vector(&g));
        }
        if q >= 2 {
            let s3 = s.clone() * s.clone() * s.clone();
            tensors.push(SymTensor::from_fn(2, N, |idx| {
                let (i, j) = (idx[0], idx[1]);
                let mut v = S::zero();
                if i == j {
                    v += S::from_f64(2.0) * b_diag::<S>(i);
                }
                if smooth {
                    if i == j && a_diag(i) {
                        v += S::one() / s.clone();
                    }
                    v -= ax[i].clone() * ax[j].clone() / s3.clone();
                }
                v
            }));
        }
        Ok(OracleResponse { value, jet: TaylorJet::new(x.to_vec(), tensors)?, flagged: !smooth })
    }

    fn max_order(&self) -> usize {
        2
    }

    fn meta(&self) -> ProblemMeta<S> {
        ProblemMeta {
            minimizer: Some(vec![S::zero(); N]),
            optimal_value: Some(S::zero()),
            growth_order: 2,
            selections: SelectionCount::Infinite,
            minimizer_is_self_referential: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_difference_check;

    #[test]
    fn hand_values() {
        let p = HalfHalf::new();
        let mut e2 = vec![0.0; 8];
        e2[1] = 1.0;
        let r = p.oracle(&e2, 2).unwrap();
        assert_eq!(r.value, 0.25);
        assert!(r.flagged);
        let mut e1 = vec![0.0; 8];
        e1[0] = 1.0;
        let r = p.oracle(&e1, 1).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.jet.tensors[1].as_vector()[0], 3.0);
        assert!(r.jet.tensors[1].as_vector()[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = HalfHalf::new();
        let rep = finite_difference_check::<f64>(&p, &[1.0; 8], 2, 1e-5).unwrap();
        assert!(rep.errors[0] <= 1e-6 && rep.errors[1] <= 1e-5, "{rep:?}");
    }
}
