use serde::{Deserialize, Serialize};

use super::instance::{hex_mat, hex_opt_vec};
use super::{check_query, OracleResponse, Problem, ProblemError, ProblemMeta, SelectionCount};
use crate::linalg::{sym_eigen, Mat};
use crate::rng::Stream;
use crate::scalar::Scalar;
use crate::taylor::{SymTensor, TaylorJet};

/// Data of `f(x) = λ_max(A_0 + Σ x_i A_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxEigInstance {
    pub seed: u64,
    /// Number of variables.
    pub n: usize,
    /// Matrix size.
    pub m: usize,
    /// `n + 1` row-major symmetric `m × m` matrices `A_0..A_n`.
    #[serde(with = "hex_mat")]
    pub a: Vec<Vec<f64>>,
    /// Reference minimizer from a long run of this library, if computed.
    #[serde(default, with = "hex_opt_vec", skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
}

/// Draw an instance: `M_0..M_n` (each m×m standard normal, row-major, in
/// that order), `A_i = (M_i + M_iᵀ)/2`, then `A_0 ← A_0 − μI` with
/// `μ = λ_max(A_0) − 1` so that `f(0) = 1`.
pub fn generate_maxeig_instance(seed: u64, n: usize, m: usize) -> Result<MaxEigInstance, ProblemError> {
    if n == 0 || m == 0 {
        return Err(ProblemError::InvalidInstance("n and m must be positive".into()));
    }
    let mut rng = Stream::new(seed);
    let mut a: Vec<Vec<f64>> = (0..=n)
        .map(|_| {
            let raw = rng.normal_vec(m * m);
            let mut s = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    s[i * m + j] = 0.5 * (raw[i * m + j] + raw[j * m + i]);
                }
            }
            s
        })
        .collect();
    let (vals, _) = sym_eigen(&Mat { n: m, data: a[0].clone() });
    let mu = vals[0] - 1.0;
    for i in 0..m {
        a[0][i * m + i] -= mu;
    }
    Ok(MaxEigInstance { seed, n, m, a, reference: None })
}

pub struct MaxEig<S> {
    inst: MaxEigInstance,
    a: Vec<Mat<S>>,
}

impl<S: Scalar> MaxEig<S> {
    pub fn new(inst: &MaxEigInstance) -> Result<Self, ProblemError> {
        if inst.a.len() != inst.n + 1 || inst.a.iter().any(|v| v.len() != inst.m * inst.m) {
            return Err(ProblemError::InvalidInstance("expected n+1 matrices of size m×m".into()));
        }
        Ok(MaxEig {
            inst: inst.clone(),
            a: inst.a.iter().map(|v| Mat { n: inst.m, data: v.iter().map(|&x| S::from_f64(x)).collect() }).collect(),
        })
    }

    pub fn instance(&self) -> &MaxEigInstance {
        &self.inst
    }

    fn matrix_at(&self, x: &[S]) -> Mat<S> {
        let mut a = self.a[0].clone();
        for (i, xi) in x.iter().enumerate() {
            if !xi.is_zero() {
                a = a.add_scaled(&self.a[i + 1], xi);
            }
        }
        a
    }
}

impl<S: Scalar> Problem<S> for MaxEig<S> {
    fn name(&self) -> String {
        "maxeig".into()
    }

    fn dim(&self) -> usize {
        self.inst.n
    }

    fn value(&self, x: &[S]) -> S {
        sym_eigen(&self.matrix_at(x)).0[0].clone()
    }

    fn oracle(&self, x: &[S], q: usize) -> Result<OracleResponse<S>, ProblemError> {
        let n = self.inst.n;
        check_query("maxeig", n, 2, x, q)?;
        let ax = self.matrix_at(x);
        let (vals, vecs) = sym_eigen(&ax);
        let lam1 = vals[0].clone();
        let u1 = &vecs[0];
        let gap_tol = ax.frobenius() * S::from_f64(1e-12);
        let flagged = vals.len() > 1 && vals[0].clone() - vals[1].clone() < gap_tol;
        let mut tensors = vec![SymTensor::constant(lam1.clone(), n)];
        // w_i = A_i u_1
        let w: Vec<Vec<S>> = self.a[1..].iter().map(|ai| ai.matvec(u1)).collect();
        if q >= 1 {
            let g: Vec<S> = w.iter().map(|wi| crate::scalar::dot(u1, wi)).collect();
            tensors.push(SymTensor::vector(&g));
        }
        if q >= 2 {
            // c[i][k] = u_1ᵀ A_i u_k for every well-separated k ≥ 2
            let mut coupling: Vec<(S, Vec<S>)> = Vec::new();
            for k in 1..vals.len() {
                let gap = lam1.clone() - vals[k].clone();
                if gap < gap_tol {
                    continue;
                }
                let ck: Vec<S> = w.iter().map(|wi| crate::scalar::dot(&vecs[k], wi)).collect();
                coupling.push((gap, ck));
            }
            let two = S::from_f64(2.0);
            tensors.push(SymTensor::from_fn(2, n, |idx| {
                let (i, j) = (idx[0], idx[1]);
                let mut acc = S::zero();
                for (gap, ck) in &coupling {
                    acc += ck[i].clone() * ck[j].clone() / gap.clone();
                }
                two.clone() * acc
            }));
        }
        Ok(OracleResponse { value: lam1, jet: TaylorJet::new(x.to_vec(), tensors)?, flagged })
    }

    fn max_order(&self) -> usize {
        2
    }

    fn meta(&self) -> ProblemMeta<S> {
        ProblemMeta {
            minimizer: self.inst.reference.as_ref().map(|r| r.iter().map(|&v| S::from_f64(v)).collect()),
            optimal_value: None,
            growth_order: 2,
            selections: SelectionCount::Infinite,
            minimizer_is_self_referential: self.inst.reference.is_some(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_difference_check;

    #[test]
    fn diagonal_cases() {
        let inst = MaxEigInstance {
            seed: 0,
            n: 1,
            m: 2,
            a: vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]],
            reference: None,
        };
        let p = MaxEig::<f64>::new(&inst).unwrap();
        let r = p.oracle(&[0.0], 2).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(r.jet.tensors[1].as_vector()[0].abs() < 1e-15);
        assert!(!r.flagged);
    }

    #[test]
    fn generator_shift_gives_unit_value_at_origin() {
        let inst = generate_maxeig_instance(3, 4, 5).unwrap();
        let p = MaxEig::<f64>::new(&inst).unwrap();
        assert!((p.value(&[0.0; 4]) - 1.0).abs() < 1e-12);
        for a in &inst.a {
            for i in 0..5 {
                for j in 0..5 {
                    assert_eq!(a[i * 5 + j], a[j * 5 + i]);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let inst = generate_maxeig_instance(17, 3, 4).unwrap();
        let p = MaxEig::<f64>::new(&inst).unwrap();
        let mut rng = Stream::new(5);
        let mut checked = 0;
        while checked < 5 {
            let x = rng.normal_vec(3);
            let (vals, _) = sym_eigen(&p.matrix_at(&x));
            if vals[0] - vals[1] <= 0.1 {
                continue;
            }
            let rep = finite_difference_check(&p, &x, 2, 1e-6).unwrap();
            assert!(rep.errors[0] <= 1e-6 && rep.errors[1] <= 1e-5, "{rep:?}");
            checked += 1;
        }
    }

    #[test]
    fn order_cap() {
        let inst = generate_maxeig_instance(1, 2, 2).unwrap();
        let p = MaxEig::<f64>::new(&inst).unwrap();
        assert!(matches!(p.oracle(&[0.0, 0.0], 3), Err(ProblemError::OrderTooHigh { .. })));
    }
}
