//! Univariate polynomials and real-root isolation.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("zero polynomial has no isolated roots")]
    ZeroPolynomial,
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(f64, f64),
}

/// Coefficients in increasing degree. The zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly1D<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Poly1D<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly1D { coeffs }
    }

    pub fn zero() -> Self {
        Poly1D { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Poly1D::new(
            self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c.clone() * S::from_usize(k)).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![S::zero(); n];
        for (k, c) in self.coeffs.iter().enumerate() {
            out[k] += c.clone();
        }
        for (k, c) in other.coeffs.iter().enumerate() {
            out[k] -= c.clone();
        }
        Poly1D::new(out)
    }

    pub fn scale(&self, s: &S) -> Self {
        Poly1D::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn max_abs_coeff(&self) -> S {
        self.coeffs.iter().fold(S::zero(), |m, c| m.max_of(c.abs()))
    }

    /// `p(a + h t)` as a polynomial in `t`.
    pub fn compose_affine(&self, a: &S, h: &S) -> Self {
        // Horner with polynomial arithmetic
        let mut acc: Vec<S> = Vec::new();
        for c in self.coeffs.iter().rev() {
            // acc = acc * (a + h t) + c
            let mut next = vec![S::zero(); acc.len() + 1];
            for (k, v) in acc.iter().enumerate() {
                next[k] += v.clone() * a.clone();
                next[k + 1] += v.clone() * h.clone();
            }
            next[0] += c.clone();
            acc = next;
        }
        Poly1D::new(acc)
    }

    /// Drop coefficients that are negligible relative to the largest one.
    fn cleaned(&self, rel: &S) -> Self {
        let m = self.max_abs_coeff();
        let cut = m * rel.clone();
        Poly1D::new(self.coeffs.iter().map(|c| if c.abs() <= cut { S::zero() } else { c.clone() }).collect())
    }

    /// Remainder of `self / d`.
    fn rem(&self, d: &Self) -> Self {
        let mut r = self.coeffs.clone();
        let dd = d.coeffs.len() - 1;
        let lead = d.coeffs[dd].clone();
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1;
            let f = r[k].clone() / lead.clone();
            for j in 0..=dd {
                let v = d.coeffs[j].clone() * f.clone();
                r[k - dd + j] -= v;
            }
            r.pop();
        }
        Poly1D::new(r)
    }
}

fn sturm_sequence<S: Scalar>(p: &Poly1D<S>) -> Vec<Poly1D<S>> {
    let rel = S::epsilon() * S::from_f64(64.0);
    let mut seq = vec![p.clone(), p.derivative()];
    while let Some(last) = seq.last() {
        if last.degree().map_or(true, |d| d == 0) {
            break;
        }
        let prev = &seq[seq.len() - 2];
        let scale = prev.max_abs_coeff();
        let r = prev.rem(last).scale(&-S::one());
        // compare the remainder against the dividend's scale to detect
        // numerically vanishing remainders (multiple roots)
        let r = Poly1D::new(
            r.coeffs.iter().map(|c| if c.abs() <= scale.clone() * rel.clone() { S::zero() } else { c.clone() }).collect(),
        );
        if r.is_zero() {
            break;
        }
        let m = r.max_abs_coeff();
        seq.push(r.scale(&(S::one() / m)));
    }
    seq
}

fn sign_changes<S: Scalar>(seq: &[Poly1D<S>], x: &S) -> i64 {
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for p in seq {
        let v = p.eval(x);
        if v.is_zero() {
            continue;
        }
        let pos = v > S::zero();
        if let Some(pp) = prev {
            if pp != pos {
                count += 1;
            }
        }
        prev = Some(pos);
    }
    count
}

/// All real roots of `p` in `[a, b]`, each located to within `tol`.
///
/// Sturm counts steer a subdivision of the interval until each piece holds a
/// single sign change, which is then bisected. Roots closer than `tol` are
/// merged into their midpoint.
pub fn poly_roots_in_interval<S: Scalar>(p: &Poly1D<S>, a: &S, b: &S, tol: &S) -> Result<Vec<S>, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    if !(a < b) {
        return Err(PolyError::EmptyInterval(a.to_f64(), b.to_f64()));
    }
    if p.degree() == Some(0) {
        return Ok(Vec::new());
    }
    let h = b.clone() - a.clone();
    // work on t in [0,1] with unit-scale coefficients
    let mut pt = p.compose_affine(a, &h);
    let m = pt.max_abs_coeff();
    if m.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    pt = pt.scale(&(S::one() / m)).cleaned(&(S::epsilon() * S::from_f64(4.0)));
    if pt.is_zero() || pt.degree() == Some(0) {
        return Ok(Vec::new());
    }
    let ttol = (tol.clone() / h.clone()).max_of(S::epsilon() * S::from_f64(4.0));
    let seq = sturm_sequence(&pt);

    let mut roots_t: Vec<S> = Vec::new();
    for end in [S::zero(), S::one()] {
        if pt.eval(&end).is_zero() {
            roots_t.push(end);
        }
    }
    let mut stack = vec![(S::zero(), S::one(), sign_changes(&seq, &S::zero()), sign_changes(&seq, &S::one()))];
    let half = S::from_f64(0.5);
    let mut guard = 0usize;
    while let Some((l, r, vl, vr)) = stack.pop() {
        guard += 1;
        if guard > 200_000 {
            break;
        }
        let count = vl - vr;
        let fl = pt.eval(&l);
        let fr = pt.eval(&r);
        let sign_change = (fl > S::zero() && fr < S::zero()) || (fl < S::zero() && fr > S::zero());
        if count <= 0 && !sign_change {
            continue;
        }
        if r.clone() - l.clone() <= ttol {
            roots_t.push((l + r) * half.clone());
            continue;
        }
        if count == 1 && sign_change {
            roots_t.push(bisect(&pt, l, r, fl, &ttol));
            continue;
        }
        let mid = (l.clone() + r.clone()) * half.clone();
        let vm = sign_changes(&seq, &mid);
        if pt.eval(&mid).is_zero() {
            roots_t.push(mid.clone());
        }
        stack.push((mid.clone(), r, vm, vr));
        stack.push((l, mid, vl, vm));
    }

    roots_t.sort_by(|x, y| x.total_cmp_nonnan(y));
    let mut merged: Vec<S> = Vec::new();
    let mut group: Vec<S> = Vec::new();
    for t in roots_t {
        if let Some(first) = group.first() {
            if t.clone() - first.clone() > ttol {
                merged.push(group_mid(&group));
                group.clear();
            }
        }
        group.push(t);
    }
    if !group.is_empty() {
        merged.push(group_mid(&group));
    }
    Ok(merged.into_iter().map(|t| a.clone() + h.clone() * t).collect())
}

fn group_mid<S: Scalar>(g: &[S]) -> S {
    (g[0].clone() + g[g.len() - 1].clone()) * S::from_f64(0.5)
}

fn bisect<S: Scalar>(p: &Poly1D<S>, mut l: S, mut r: S, mut fl: S, ttol: &S) -> S {
    let half = S::from_f64(0.5);
    for _ in 0..10_000 {
        if r.clone() - l.clone() <= ttol.clone() {
            break;
        }
        let mid = (l.clone() + r.clone()) * half.clone();
        if mid <= l || mid >= r {
            break;
        }
        let fm = p.eval(&mid);
        if fm.is_zero() {
            return mid;
        }
        if (fm > S::zero()) == (fl > S::zero()) {
            l = mid;
            fl = fm;
        } else {
            r = mid;
        }
    }
    (l + r) * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::BigFloat;

    #[test]
    fn simple_roots() {
        let p = Poly1D::new(vec![-1.0, 0.0, 1.0]);
        let r = poly_roots_in_interval(&p, &0.0, &2.0, &1e-12).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-12);
        let q = Poly1D::new(vec![1.0, 0.0, 1.0]);
        assert!(poly_roots_in_interval(&q, &-10.0, &10.0, &1e-12).unwrap().is_empty());
        assert_eq!(poly_roots_in_interval(&Poly1D::<f64>::zero(), &0.0, &1.0, &1e-9), Err(PolyError::ZeroPolynomial));
    }

    #[test]
    fn double_root_is_found_once() {
        // (t - 0.3)^2 (t + 2)
        let p = Poly1D::new(vec![0.18, -1.11, 1.4, 1.0]);
        let r = poly_roots_in_interval(&p, &-3.0, &1.0, &1e-6).unwrap();
        assert_eq!(r.len(), 2, "{r:?}");
        assert!((r[0] + 2.0).abs() < 1e-9);
        assert!((r[1] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn compose_affine_matches_evaluation() {
        let p = Poly1D::new(vec![0.5, -1.0, 2.0, 0.25]);
        let c = p.compose_affine(&-0.4, &1.5);
        for k in 0..7 {
            let t = k as f64 / 6.0;
            assert!((c.eval(&t) - p.eval(&(-0.4 + 1.5 * t))).abs() < 1e-13);
        }
    }

    #[test]
    fn cubic_roots_extended_precision() {
        type B = BigFloat<512>;
        let f = |v: f64| B::from_f64(v);
        // (z - 0.25)(z + 0.3)(z - 0.9) = z^3 - 0.85 z^2 - 0.12 z + 0.0675
        let c = [B::parse_decimal("0.0675"), B::parse_decimal("-0.12"), B::parse_decimal("-0.85"), f(1.0)];
        let p = Poly1D::new(c.to_vec());
        let tol = B::parse_decimal("1e-30");
        let r = poly_roots_in_interval(&p, &f(-0.4), &f(0.6), &tol).unwrap();
        assert_eq!(r.len(), 2, "{r:?}");
        let scale = p.max_abs_coeff();
        assert!((r[0].clone() + B::parse_decimal("0.3")).abs() <= tol, "{r:?}");
        assert!((r[1].clone() - B::parse_decimal("0.25")).abs() <= tol);
        for x in &r {
            assert!(p.eval(x).abs() <= tol.clone() * scale.clone());
        }
    }
}
