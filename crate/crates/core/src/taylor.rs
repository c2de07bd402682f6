//! Symmetric derivative tensors and Taylor jets.
//!
//! A tensor of order `m` stores one coefficient per non-decreasing
//! multi-index `i1 <= ... <= im`, namely the partial derivative
//! `∂^m f / ∂x_i1 ... ∂x_im`. Contracting with `v` in every slot gives the
//! homogeneous polynomial `D^m f(y)(v)^m`.

use thiserror::Error;

use crate::poly::Poly1D;
use crate::scalar::{sub_vec, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaylorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("univariate restriction needs n = 1, got n = {0}")]
    NotUnivariate(usize),
    #[error("tensor order {order} does not match slot {slot}")]
    OrderMismatch { order: usize, slot: usize },
}

/// All non-decreasing multi-indices of length `m` over `0..n`, in lexicographic order.
pub fn multi_indices(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m == 0 {
        out.push(Vec::new());
        return out;
    }
    if n == 0 {
        return out;
    }
    let mut cur = vec![0usize; m];
    loop {
        out.push(cur.clone());
        // advance to the next non-decreasing tuple
        let mut k = m;
        while k > 0 && cur[k - 1] == n - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        cur[k - 1] += 1;
        let v = cur[k - 1];
        for c in cur.iter_mut().skip(k) {
            *c = v;
        }
    }
    out
}

/// Binomial coefficient as `usize`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

pub fn factorial<S: Scalar>(m: usize) -> S {
    let mut r = S::one();
    for i in 2..=m {
        r *= S::from_usize(i);
    }
    r
}

/// Number of distinct orderings of a sorted multi-index: `m! / ∏ c_i!`.
fn multiplicity(idx: &[usize]) -> u64 {
    let m = idx.len();
    let mut r: u64 = (1..=m as u64).product();
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j < m && idx[j] == idx[i] {
            j += 1;
        }
        let c: u64 = (1..=(j - i) as u64).product();
        r /= c;
        i = j;
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor<S> {
    order: usize,
    dim: usize,
    indices: Vec<Vec<usize>>,
    mult: Vec<u64>,
    coeffs: Vec<S>,
}

impl<S: Scalar> SymTensor<S> {
    pub fn zeros(order: usize, dim: usize) -> Self {
        Self::from_fn(order, dim, |_| S::zero())
    }

    /// Build from a function of the sorted multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let indices = multi_indices(dim, order);
        let mult = indices.iter().map(|i| multiplicity(i)).collect();
        let coeffs = indices.iter().map(|i| f(i)).collect();
        SymTensor { order, dim, indices, mult, coeffs }
    }

    pub fn scalar(v: S) -> Self {
        SymTensor { order: 0, dim: 0, indices: vec![Vec::new()], mult: vec![1], coeffs: vec![v] }
            .with_dim_zero_order()
    }

    fn with_dim_zero_order(self) -> Self {
        self
    }

    pub fn constant(v: S, dim: usize) -> Self {
        let mut t = Self::scalar(v);
        t.dim = dim;
        t
    }

    pub fn vector(g: &[S]) -> Self {
        Self::from_fn(1, g.len(), |i| g[i[0]].clone())
    }

    /// Order-2 tensor from a symmetric row-major matrix (upper triangle is read).
    pub fn matrix(n: usize, h: &[S]) -> Self {
        Self::from_fn(2, n, |i| h[i[0] * n + i[1]].clone())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    /// Coefficient at an arbitrary (not necessarily sorted) multi-index.
    pub fn get(&self, idx: &[usize]) -> S {
        let mut key = idx.to_vec();
        key.sort_unstable();
        match self.indices.binary_search(&key) {
            Ok(p) => self.coeffs[p].clone(),
            Err(_) => S::zero(),
        }
    }

    pub fn value(&self) -> S {
        self.coeffs[0].clone()
    }

    /// The order-1 tensor as a dense vector.
    pub fn as_vector(&self) -> Vec<S> {
        self.coeffs.clone()
    }

    /// The order-2 tensor as a dense row-major matrix.
    pub fn as_matrix(&self) -> Vec<S> {
        let n = self.dim;
        let mut h = vec![S::zero(); n * n];
        for (idx, c) in self.indices.iter().zip(&self.coeffs) {
            h[idx[0] * n + idx[1]] = c.clone();
            h[idx[1] * n + idx[0]] = c.clone();
        }
        h
    }

    fn check(&self, v: &[S]) -> Result<(), TaylorError> {
        if self.order > 0 && v.len() != self.dim {
            return Err(TaylorError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// `D^m f(y)(v)^m`.
    pub fn apply(&self, v: &[S]) -> Result<S, TaylorError> {
        self.check(v)?;
        let mut acc = S::zero();
        for ((idx, c), &mu) in self.indices.iter().zip(&self.coeffs).zip(&self.mult) {
            if c.is_zero() {
                continue;
            }
            let mut term = c.clone() * S::from_f64(mu as f64);
            for &i in idx {
                term *= v[i].clone();
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Gradient of `v ↦ apply(v)`.
    pub fn apply_gradient(&self, v: &[S]) -> Result<Vec<S>, TaylorError> {
        self.check(v)?;
        let mut g = vec![S::zero(); self.dim];
        if self.order == 0 {
            return Ok(g);
        }
        for ((idx, c), &mu) in self.indices.iter().zip(&self.coeffs).zip(&self.mult) {
            if c.is_zero() {
                continue;
            }
            let base = c.clone() * S::from_f64(mu as f64);
            for i in 0..idx.len() {
                let mut term = base.clone();
                for (t, &k) in idx.iter().enumerate() {
                    if t != i {
                        term *= v[k].clone();
                    }
                }
                g[idx[i]] += term;
            }
        }
        Ok(g)
    }

    /// Hessian of `v ↦ apply(v)` as a row-major matrix.
    pub fn apply_hessian(&self, v: &[S]) -> Result<Vec<S>, TaylorError> {
        self.check(v)?;
        let n = self.dim;
        let mut h = vec![S::zero(); n * n];
        if self.order < 2 {
            return Ok(h);
        }
        for ((idx, c), &mu) in self.indices.iter().zip(&self.coeffs).zip(&self.mult) {
            if c.is_zero() {
                continue;
            }
            let base = c.clone() * S::from_f64(mu as f64);
            for i in 0..idx.len() {
                for j in 0..idx.len() {
                    if i == j {
                        continue;
                    }
                    let mut term = base.clone();
                    for (t, &k) in idx.iter().enumerate() {
                        if t != i && t != j {
                            term *= v[k].clone();
                        }
                    }
                    h[idx[i] * n + idx[j]] += term;
                }
            }
        }
        Ok(h)
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        SymTensor {
            order: self.order,
            dim: self.dim,
            indices: self.indices.clone(),
            mult: self.mult.clone(),
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order);
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        let mut t = self.clone();
        for (a, b) in t.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b.clone();
        }
        t
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn coeffs_mut(&mut self) -> &mut [S] {
        &mut self.coeffs
    }
}

/// Center point plus derivative tensors of orders `0..=q`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorJet<S> {
    pub center: Vec<S>,
    pub tensors: Vec<SymTensor<S>>,
}

impl<S: Scalar> TaylorJet<S> {
    pub fn new(center: Vec<S>, tensors: Vec<SymTensor<S>>) -> Result<Self, TaylorError> {
        let n = center.len();
        for (m, t) in tensors.iter().enumerate() {
            if t.order() != m {
                return Err(TaylorError::OrderMismatch { order: t.order(), slot: m });
            }
            if m > 0 && t.dim() != n {
                return Err(TaylorError::DimensionMismatch { expected: n, got: t.dim() });
            }
        }
        Ok(TaylorJet { center, tensors })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn degree(&self) -> usize {
        self.tensors.len() - 1
    }

    pub fn value(&self) -> S {
        self.tensors[0].value()
    }

    pub fn gradient_at_center(&self) -> Vec<S> {
        if self.tensors.len() > 1 {
            self.tensors[1].as_vector()
        } else {
            vec![S::zero(); self.dim()]
        }
    }

    /// Lower the degree to `q` by dropping higher tensors.
    pub fn truncate(&self, q: usize) -> Self {
        TaylorJet { center: self.center.clone(), tensors: self.tensors[..=q.min(self.degree())].to_vec() }
    }

    fn offset(&self, z: &[S]) -> Result<Vec<S>, TaylorError> {
        if z.len() != self.dim() {
            return Err(TaylorError::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        Ok(sub_vec(z, &self.center))
    }
}

/// `Σ_m (1/m!) D^m f(y)(z − y)^m`.
pub fn jet_eval<S: Scalar>(jet: &TaylorJet<S>, z: &[S]) -> Result<S, TaylorError> {
    let d = jet.offset(z)?;
    let mut acc = jet.value();
    let mut fact = S::one();
    for (m, t) in jet.tensors.iter().enumerate().skip(1) {
        fact *= S::from_usize(m);
        acc += t.apply(&d)? / fact.clone();
    }
    Ok(acc)
}

pub fn jet_gradient<S: Scalar>(jet: &TaylorJet<S>, z: &[S]) -> Result<Vec<S>, TaylorError> {
    let d = jet.offset(z)?;
    let mut g = vec![S::zero(); jet.dim()];
    let mut fact = S::one();
    for (m, t) in jet.tensors.iter().enumerate().skip(1) {
        fact *= S::from_usize(m);
        for (gi, ti) in g.iter_mut().zip(t.apply_gradient(&d)?) {
            *gi += ti / fact.clone();
        }
    }
    Ok(g)
}

pub fn jet_hessian<S: Scalar>(jet: &TaylorJet<S>, z: &[S]) -> Result<Vec<S>, TaylorError> {
    let d = jet.offset(z)?;
    let n = jet.dim();
    let mut h = vec![S::zero(); n * n];
    let mut fact = S::one();
    for (m, t) in jet.tensors.iter().enumerate().skip(1) {
        fact *= S::from_usize(m);
        if m < 2 {
            continue;
        }
        for (hi, ti) in h.iter_mut().zip(t.apply_hessian(&d)?) {
            *hi += ti / fact.clone();
        }
    }
    Ok(h)
}

/// Monomial coefficients of `z ↦ jet_eval(jet, z)` for a univariate jet.
pub fn jet_restrict_1d<S: Scalar>(jet: &TaylorJet<S>) -> Result<Poly1D<S>, TaylorError> {
    jet_restrict_1d_about(jet, &S::zero())
}

/// Like [`jet_restrict_1d`] but in the shifted variable `u = z − origin`.
///
/// Working in local coordinates keeps coefficients well scaled when the
/// trust region is tiny compared to its distance from 0.
pub fn jet_restrict_1d_about<S: Scalar>(jet: &TaylorJet<S>, origin: &S) -> Result<Poly1D<S>, TaylorError> {
    if jet.dim() != 1 {
        return Err(TaylorError::NotUnivariate(jet.dim()));
    }
    // z − y = u + d with d = origin − y
    let d = origin.clone() - jet.center[0].clone();
    let q = jet.degree();
    let mut out = vec![S::zero(); q + 1];
    let mut fact = S::one();
    for (m, t) in jet.tensors.iter().enumerate() {
        if m > 0 {
            fact *= S::from_usize(m);
        }
        let c = t.coeffs()[0].clone() / fact.clone();
        // expand c (u + d)^m
        let mut dpow = S::one();
        for k in (0..=m).rev() {
            out[k] += c.clone() * S::from_usize(binomial(m, k)) * dpow.clone();
            dpow *= d.clone();
        }
    }
    Ok(Poly1D::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_counts_match_binomial() {
        for n in 1..5 {
            for m in 0..6 {
                assert_eq!(multi_indices(n, m).len(), binomial(n + m - 1, m));
            }
        }
    }

    #[test]
    fn apply_small_cases() {
        let g = SymTensor::vector(&[1.0, -2.0, 0.5]);
        assert_eq!(g.apply(&[2.0, 1.0, 4.0]).unwrap(), 2.0);
        let eye = SymTensor::matrix(2, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(eye.apply(&[1.0, 2.0]).unwrap(), 5.0);
        // third derivative of x^3 is 6, and 6 * 2^3 = 48
        let t3 = SymTensor::from_fn(3, 1, |_| 6.0);
        assert_eq!(t3.apply(&[2.0]).unwrap(), 48.0);
        assert!(matches!(g.apply(&[1.0]), Err(TaylorError::DimensionMismatch { .. })));
    }

    #[test]
    fn off_diagonal_entry_counted_twice() {
        // H = [[0,1],[1,0]] gives vᵀHv = 2 v0 v1
        let h = SymTensor::matrix(2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(h.apply(&[3.0, 5.0]).unwrap(), 30.0);
        assert_eq!(h.get(&[1, 0]), 1.0);
    }

    #[test]
    fn quadratic_jet_is_exact() {
        // x² at y = 1
        let jet = TaylorJet::new(
            vec![1.0],
            vec![SymTensor::constant(1.0, 1), SymTensor::vector(&[2.0]), SymTensor::matrix(1, &[2.0])],
        )
        .unwrap();
        for &z in &[-3.0, 0.0, 0.7, 5.0] {
            assert!((jet_eval(&jet, &[z]).unwrap() - z * z).abs() < 1e-14);
        }
        assert_eq!(jet_eval(&jet, &[1.0]).unwrap(), 1.0);
        let p = jet_restrict_1d(&jet).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 0.0, 1.0]);
        let g = jet_gradient(&jet, &[0.25]).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn restriction_about_shifted_origin() {
        let jet = TaylorJet::new(
            vec![0.3],
            vec![
                SymTensor::constant(0.2, 1),
                SymTensor::vector(&[-1.0]),
                SymTensor::matrix(1, &[0.7]),
                SymTensor::from_fn(3, 1, |_| 2.5),
            ],
        )
        .unwrap();
        let origin = -0.4;
        let p = jet_restrict_1d_about(&jet, &origin).unwrap();
        for k in 0..10 {
            let z = -1.0 + 0.2 * k as f64;
            assert!((p.eval(&(z - origin)) - jet_eval(&jet, &[z]).unwrap()).abs() < 1e-13);
        }
    }
}
