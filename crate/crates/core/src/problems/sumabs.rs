use serde::{Deserialize, Serialize};

use super::instance::{hex_mat, hex_vec};
use super::{check_query, OracleResponse, Problem, ProblemError, ProblemMeta, SelectionCount};
use crate::linalg::{cholesky, rank_of_rows, Mat};
use crate::rng::Stream;
use crate::scalar::{dot, Scalar};
use crate::taylor::{SymTensor, TaylorJet};

/// Data of `f(x) = Σ_i |g_iᵀx + ½xᵀH_ix + (c_i/24)‖x‖⁴|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumAbsInstance {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    /// Positive weights with `Σ λ_i g_i = 0`.
    #[serde(with = "hex_vec")]
    pub lambda: Vec<f64>,
    #[serde(with = "hex_mat")]
    pub g: Vec<Vec<f64>>,
    /// Row-major `n × n` matrices.
    #[serde(with = "hex_mat")]
    pub h: Vec<Vec<f64>>,
    #[serde(with = "hex_vec")]
    pub c: Vec<f64>,
}

/// Draw an instance.
///
/// Draw order from one SplitMix64 stream: `λ` (m uniforms on [0.5,1.5], then
/// normalized), `g_1..g_{m−1}` (standard normals, row-major), `Q_1..Q_m`
/// (n×n standard normals, row-major), `c` (m uniforms on [0.5,1.5]). Then
/// `g_m = −(1/λ_m) Σ_{i<m} λ_i g_i` and `H_i = Q_iᵀQ_i + 0.1 I`. If the
/// `g_i` are not affinely independent or some `H_i` fails a Cholesky test,
/// the whole draw is repeated from the continuing stream.
pub fn generate_sumabs_instance(seed: u64, n: usize, m: usize) -> Result<SumAbsInstance, ProblemError> {
    if n == 0 || m == 0 || m > n + 1 {
        return Err(ProblemError::InvalidInstance(format!("need 1 <= m <= n+1, got n={n}, m={m}")));
    }
    let mut rng = Stream::new(seed);
    for _attempt in 0..100 {
        let raw: Vec<f64> = (0..m).map(|_| rng.uniform_in(0.5, 1.5)).collect();
        let total: f64 = raw.iter().sum();
        let lambda: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut g: Vec<Vec<f64>> = (0..m - 1).map(|_| rng.normal_vec(n)).collect();
        let mut last = vec![0.0; n];
        for (li, gi) in lambda.iter().zip(&g) {
            for (a, b) in last.iter_mut().zip(gi) {
                *a -= li * b;
            }
        }
        for a in last.iter_mut() {
            *a /= lambda[m - 1];
        }
        g.push(last);
        let h: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let q = rng.normal_vec(n * n);
                let mut hm = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for k in 0..n {
                            s += q[k * n + i] * q[k * n + j];
                        }
                        hm[i * n + j] = s + if i == j { 0.1 } else { 0.0 };
                    }
                }
                hm
            })
            .collect();
        let c: Vec<f64> = (0..m).map(|_| rng.uniform_in(0.5, 1.5)).collect();

        let scale = g.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        let diffs: Vec<Vec<f64>> =
            g[..m - 1].iter().map(|gi| gi.iter().zip(&g[m - 1]).map(|(a, b)| a - b).collect()).collect();
        let independent = rank_of_rows(&diffs, 1e-10 * scale) == m - 1;
        let spd = h.iter().all(|hm| cholesky(&Mat { n, data: hm.clone() }).is_some());
        if independent && spd {
            return Ok(SumAbsInstance { seed, n, m, lambda, g, h, c });
        }
    }
    Err(ProblemError::InvalidInstance("could not draw an affinely independent instance".into()))
}

pub struct SumAbs<S> {
    inst: SumAbsInstance,
    g: Vec<Vec<S>>,
    h: Vec<Mat<S>>,
    c: Vec<S>,
}

/// The pieces are quartic polynomials, so all derivatives above 4 vanish;
/// higher requests are padded with zero tensors.
pub const SUMABS_MAX_ORDER: usize = 8;

impl<S: Scalar> SumAbs<S> {
    pub fn new(inst: &SumAbsInstance) -> Result<Self, ProblemError> {
        let (n, m) = (inst.n, inst.m);
        if inst.g.len() != m || inst.h.len() != m || inst.c.len() != m {
            return Err(ProblemError::InvalidInstance("term count mismatch".into()));
        }
        if inst.g.iter().any(|v| v.len() != n) || inst.h.iter().any(|v| v.len() != n * n) {
            return Err(ProblemError::InvalidInstance("dimension mismatch".into()));
        }
        Ok(SumAbs {
            inst: inst.clone(),
            g: inst.g.iter().map(|v| v.iter().map(|&x| S::from_f64(x)).collect()).collect(),
            h: inst.h.iter().map(|v| Mat { n, data: v.iter().map(|&x| S::from_f64(x)).collect() }).collect(),
            c: inst.c.iter().map(|&x| S::from_f64(x)).collect(),
        })
    }

    pub fn instance(&self) -> &SumAbsInstance {
        &self.inst
    }

    fn terms(&self, x: &[S]) -> Vec<S> {
        let r2 = dot(x, x);
        let r4 = r2.clone() * r2;
        let half = S::from_f64(0.5);
        let c24 = S::from_f64(24.0);
        (0..self.inst.m)
            .map(|i| {
                dot(&self.g[i], x) + half.clone() * self.h[i].bilinear(x, x) + self.c[i].clone() * r4.clone() / c24.clone()
            })
            .collect()
    }
}

impl<S: Scalar> Problem<S> for SumAbs<S> {
    fn name(&self) -> String {
        "sumabs".into()
    }

    fn dim(&self) -> usize {
        self.inst.n
    }

    fn value(&self, x: &[S]) -> S {
        self.terms(x).iter().fold(S::zero(), |a, t| a + t.abs())
    }

    fn oracle(&self, x: &[S], q: usize) -> Result<OracleResponse<S>, ProblemError> {
        let n = self.inst.n;
        check_query("sumabs", n, SUMABS_MAX_ORDER, x, q)?;
        let terms = self.terms(x);
        let signs: Vec<S> = terms.iter().map(|t| t.sign_nonneg()).collect();
        let value = terms.iter().zip(&signs).fold(S::zero(), |a, (t, s)| a + t.clone() * s.clone());
        let flagged = terms.iter().any(|t| t.is_zero()) && x.iter().any(|v| !v.is_zero());
        let r2 = dot(x, x);
        let csum = self.c.iter().zip(&signs).fold(S::zero(), |a, (c, s)| a + c.clone() * s.clone());
        let mut tensors = vec![SymTensor::constant(value.clone(), n)];
        if q >= 1 {
            // Σ s_i (g_i + H_i x + (c_i/6)‖x‖² x)
            let mut grad = vec![S::zero(); n];
            for i in 0..self.inst.m {
                let hx = self.h[i].matvec(x);
                for k in 0..n {
                    grad[k] += signs[i].clone() * (self.g[i][k].clone() + hx[k].clone());
                }
            }
            let quartic = csum.clone() * r2.clone() / S::from_f64(6.0);
            for k in 0..n {
                grad[k] += quartic.clone() * x[k].clone();
            }
            tensors.push(SymTensor::vector(&grad));
        }
        if q >= 2 {
            let mut hs = Mat::<S>::zeros(n);
            for i in 0..self.inst.m {
                hs = hs.add_scaled(&self.h[i], &signs[i]);
            }
            let c6 = csum.clone() / S::from_f64(6.0);
            tensors.push(SymTensor::from_fn(2, n, |idx| {
                let (a, b) = (idx[0], idx[1]);
                let mut v = hs.get(a, b).clone() + c6.clone() * S::from_f64(2.0) * x[a].clone() * x[b].clone();
                if a == b {
                    v += c6.clone() * r2.clone();
                }
                v
            }));
        }
        let c3 = csum.clone() / S::from_f64(3.0);
        if q >= 3 {
            tensors.push(SymTensor::from_fn(3, n, |idx| {
                let (a, b, c) = (idx[0], idx[1], idx[2]);
                let mut v = S::zero();
                if a == b {
                    v += x[c].clone();
                }
                if a == c {
                    v += x[b].clone();
                }
                if b == c {
                    v += x[a].clone();
                }
                c3.clone() * v
            }));
        }
        if q >= 4 {
            tensors.push(SymTensor::from_fn(4, n, |idx| {
                let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
                let k = (a == b && c == d) as u8 + (a == c && b == d) as u8 + (a == d && b == c) as u8;
                c3.clone() * S::from_f64(k as f64)
            }));
        }
        for m in 5..=q {
            tensors.push(SymTensor::zeros(m, n));
        }
        Ok(OracleResponse { value, jet: TaylorJet::new(x.to_vec(), tensors)?, flagged })
    }

    fn max_order(&self) -> usize {
        SUMABS_MAX_ORDER
    }

    fn meta(&self) -> ProblemMeta<S> {
        ProblemMeta {
            minimizer: Some(vec![S::zero(); self.inst.n]),
            optimal_value: Some(S::zero()),
            growth_order: 2,
            selections: SelectionCount::Finite(1usize.checked_shl(self.inst.m as u32).unwrap_or(usize::MAX)),
            minimizer_is_self_referential: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_difference_check;
    use crate::taylor::jet_eval;

    fn hand_instance() -> SumAbsInstance {
        SumAbsInstance {
            seed: 0,
            n: 2,
            m: 2,
            lambda: vec![0.5, 0.5],
            g: vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            h: vec![vec![1.0, 0.0, 0.0, 1.0]; 2],
            c: vec![1.0, 1.0],
        }
    }

    #[test]
    fn hand_instance_value() {
        let p = SumAbs::<f64>::new(&hand_instance()).unwrap();
        // |1 + 1/2 + 1/24| + |−1 + 1/2 + 1/24|
        assert!((p.value(&[1.0, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(p.value(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn generator_invariants() {
        for (seed, n, m) in [(1u64, 10usize, 8usize), (2, 5, 6), (3, 3, 1), (4, 4, 2)] {
            let inst = generate_sumabs_instance(seed, n, m).unwrap();
            let gmax = inst.g.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
            for k in 0..n {
                let s: f64 = (0..m).map(|i| inst.lambda[i] * inst.g[i][k]).sum();
                assert!(s.abs() <= 1e-12 * gmax.max(1.0));
            }
            assert!(inst.lambda.iter().all(|&l| l > 0.0));
            assert!((inst.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(inst.c.iter().all(|&c| (0.5..1.5).contains(&c)));
            // same seed, same bits
            assert_eq!(generate_sumabs_instance(seed, n, m).unwrap(), inst);
        }
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = generate_sumabs_instance(11, 4, 3).unwrap();
        let s = serde_json::to_string(&inst).unwrap();
        let back: SumAbsInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let inst = generate_sumabs_instance(5, 6, 4).unwrap();
        let p = SumAbs::<f64>::new(&inst).unwrap();
        let mut rng = Stream::new(99);
        for _ in 0..5 {
            let x = rng.normal_vec(6);
            let rep = finite_difference_check(&p, &x, 2, 1e-6).unwrap();
            assert!(rep.errors[0] <= 1e-6, "{rep:?}");
            assert!(rep.errors[1] <= 1e-5, "{rep:?}");
        }
    }

    #[test]
    fn quartic_jet_is_exact_on_a_fixed_sign_region() {
        let inst = generate_sumabs_instance(8, 3, 2).unwrap();
        let p = SumAbs::<f64>::new(&inst).unwrap();
        let x = vec![0.3, -0.2, 0.5];
        let r = p.oracle(&x, 4).unwrap();
        let signs: Vec<f64> = p.terms(&x).iter().map(|t| t.signum()).collect();
        let mut rng = Stream::new(1);
        for _ in 0..10 {
            let z: Vec<f64> = rng.normal_vec(3);
            let exact: f64 = p.terms(&z).iter().zip(&signs).map(|(t, s)| t * s).sum();
            let approx = jet_eval(&r.jet, &z).unwrap();
            assert!((exact - approx).abs() < 1e-11 * (1.0 + exact.abs()), "{exact} {approx}");
        }
    }
}
