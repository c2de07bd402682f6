//! Small dense linear algebra, generic over the scalar backend.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    pub n: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend(r.iter().cloned());
        }
        Mat { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|i| {
                let mut acc = S::zero();
                for j in 0..self.n {
                    acc += self.get(i, j).clone() * v[j].clone();
                }
                acc
            })
            .collect()
    }

    /// `vᵀ A w`.
    pub fn bilinear(&self, v: &[S], w: &[S]) -> S {
        crate::scalar::dot(v, &self.matvec(w))
    }

    pub fn add_scaled(&self, other: &Mat<S>, c: &S) -> Mat<S> {
        Mat {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + c.clone() * b.clone()).collect(),
        }
    }

    pub fn frobenius(&self) -> S {
        crate::scalar::norm2(&self.data)
    }

    pub fn max_abs(&self) -> S {
        crate::scalar::norm_inf(&self.data)
    }
}

/// Cholesky factor `L` with `A = L Lᵀ`, or `None` if `A` is not positive definite.
pub fn cholesky<S: Scalar>(a: &Mat<S>) -> Option<Mat<S>> {
    let n = a.n;
    let mut l = Mat::<S>::zeros(n);
    for j in 0..n {
        let mut d = a.get(j, j).clone();
        for k in 0..j {
            d -= l.get(j, k).clone() * l.get(j, k).clone();
        }
        if !(d > S::zero()) {
            return None;
        }
        let dj = d.sqrt();
        l.set(j, j, dj.clone());
        for i in j + 1..n {
            let mut s = a.get(i, j).clone();
            for k in 0..j {
                s -= l.get(i, k).clone() * l.get(j, k).clone();
            }
            l.set(i, j, s / dj.clone());
        }
    }
    Some(l)
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for a numerically singular matrix.
pub fn solve<S: Scalar>(a: &Mat<S>, b: &[S]) -> Option<Vec<S>> {
    let n = a.n;
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let scale = a.max_abs().max_of(S::from_f64(f64::MIN_POSITIVE));
    let tiny = scale * S::epsilon() * S::from_usize(n.max(1));
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() <= tiny {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
            }
            x.swap(piv, col);
        }
        let p = m[col * n + col].clone();
        for r in col + 1..n {
            let f = m[r * n + col].clone() / p.clone();
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let v = m[col * n + c].clone();
                m[r * n + c] -= f.clone() * v;
            }
            let xc = x[col].clone();
            x[r] -= f * xc;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i].clone();
        for c in i + 1..n {
            s -= m[i * n + c].clone() * x[c].clone();
        }
        x[i] = s / m[i * n + i].clone();
    }
    Some(x)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert<S: Scalar>(a: &Mat<S>) -> Option<Mat<S>> {
    let n = a.n;
    let mut m = a.data.clone();
    let mut inv = Mat::<S>::identity(n).data;
    let scale = a.max_abs().max_of(S::from_f64(f64::MIN_POSITIVE));
    let tiny = scale * S::epsilon() * S::from_usize(n.max(1));
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() <= tiny {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        let p = m[col * n + col].clone();
        for c in 0..n {
            m[col * n + c] = m[col * n + c].clone() / p.clone();
            inv[col * n + c] = inv[col * n + c].clone() / p.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col].clone();
            if f.is_zero() {
                continue;
            }
            for c in 0..n {
                let (mv, iv) = (m[col * n + c].clone(), inv[col * n + c].clone());
                m[r * n + c] -= f.clone() * mv;
                inv[r * n + c] -= f.clone() * iv;
            }
        }
    }
    Some(Mat { n, data: inv })
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted in decreasing order together with the matching
/// unit eigenvectors (`vectors[k]` belongs to `values[k]`).
pub fn sym_eigen<S: Scalar>(a: &Mat<S>) -> (Vec<S>, Vec<Vec<S>>) {
    let n = a.n;
    let mut m = a.clone();
    let mut v = Mat::<S>::identity(n);
    let two = S::from_f64(2.0);
    for _sweep in 0..100 {
        let mut off = S::zero();
        for i in 0..n {
            for j in i + 1..n {
                off += m.get(i, j).clone() * m.get(i, j).clone();
            }
        }
        let total = m.frobenius();
        if off.sqrt() <= total * S::epsilon() * S::from_f64(0.1) || off.is_zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q).clone();
                if apq.is_zero() {
                    continue;
                }
                let app = m.get(p, p).clone();
                let aqq = m.get(q, q).clone();
                let theta = (aqq - app) / (two.clone() * apq.clone());
                let t = theta.sign_nonneg()
                    / (theta.abs() + (theta.clone() * theta.clone() + S::one()).sqrt());
                let c = S::one() / (t.clone() * t.clone() + S::one()).sqrt();
                let s = t.clone() * c.clone();
                for k in 0..n {
                    let mkp = m.get(k, p).clone();
                    let mkq = m.get(k, q).clone();
                    m.set(k, p, c.clone() * mkp.clone() - s.clone() * mkq.clone());
                    m.set(k, q, s.clone() * mkp + c.clone() * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k).clone();
                    let mqk = m.get(q, k).clone();
                    m.set(p, k, c.clone() * mpk.clone() - s.clone() * mqk.clone());
                    m.set(q, k, s.clone() * mpk + c.clone() * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p).clone();
                    let vkq = v.get(k, q).clone();
                    v.set(k, p, c.clone() * vkp.clone() - s.clone() * vkq.clone());
                    v.set(k, q, s.clone() * vkp + c.clone() * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp_nonnan(m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i).clone()).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v.get(k, i).clone()).collect()).collect();
    (values, vectors)
}

/// Numerical rank of a set of row vectors via modified Gram-Schmidt.
pub fn rank_of_rows(rows: &[Vec<f64>], tol: f64) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > tol {
            basis.push(v.iter().map(|x| x / nv).collect());
        }
    }
    basis.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_detects_definiteness() {
        let a = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        assert!((l.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((l.get(1, 1) - 2f64.sqrt()).abs() < 1e-15);
        let b = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(cholesky(&b).is_none());
    }

    #[test]
    fn solve_small_system() {
        let a = Mat::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]);
        let x = solve(&a, &[5.0, 3.0, 6.0]).unwrap();
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip([5.0, 3.0, 6.0]) {
            assert!((ri - bi).abs() < 1e-13);
        }
        let sing = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve(&sing, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = Mat::from_rows(&[
            vec![2.0, -1.0, 0.5, 0.0],
            vec![-1.0, 3.0, 0.2, 1.0],
            vec![0.5, 0.2, -1.0, 0.3],
            vec![0.0, 1.0, 0.3, 0.5],
        ]);
        let (vals, vecs) = sym_eigen(&a);
        for w in vals.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for (lam, u) in vals.iter().zip(&vecs) {
            let au = a.matvec(u);
            for (x, y) in au.iter().zip(u) {
                assert!((x - lam * y).abs() < 1e-12);
            }
        }
        let trace: f64 = vals.iter().sum();
        assert!((trace - 4.5).abs() < 1e-12);
    }

    #[test]
    fn rank_counts_independent_rows() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert_eq!(rank_of_rows(&rows, 1e-10), 2);
    }

    #[test]
    fn invert_round_trips() {
        let a = Mat::from_rows(&[vec![4.0, 1.0, 0.0], vec![0.0, 0.0, 2.0], vec![1.0, 3.0, 1.0]]);
        let inv = invert(&a).unwrap();
        for i in 0..3 {
            let e: Vec<f64> = (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
            let col = a.matvec(&(0..3).map(|r| *inv.get(r, i)).collect::<Vec<_>>());
            for (x, y) in col.iter().zip(&e) {
                assert!((x - y).abs() < 1e-14);
            }
        }
        assert!(invert(&Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]])).is_none());
    }
}
