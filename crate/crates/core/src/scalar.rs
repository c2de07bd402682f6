//! Real-number backends.
//!
//! Every numerical routine in this crate is generic over [`Scalar`]. Two
//! backends ship with the crate: plain `f64` and [`BigFloat`], an
//! arbitrary-precision binary float whose mantissa width is a const
//! parameter.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use astro_float::{BigFloat as AstroFloat, Consts, Radix, RoundingMode, Sign};

/// Abstract real number used throughout the library.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Human-readable backend name, e.g. `binary64` or `bigfloat(512)`.
    fn backend_name() -> String;
    /// Number of mantissa bits carried by the backend.
    fn mantissa_bits() -> u32;

    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn is_finite(&self) -> bool;

    /// Format for trace output.
    fn to_trace_string(&self) -> String;
    /// Parse a decimal literal in this backend; NaN if malformed.
    fn parse_decimal_str(s: &str) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn from_usize(v: usize) -> Self {
        Self::from_f64(v as f64)
    }

    /// Unit roundoff `2^(1 - bits)`.
    fn epsilon() -> Self {
        Self::from_f64(2.0).powi(1 - Self::mantissa_bits() as i32)
    }

    fn powf(&self, e: &Self) -> Self {
        if *self == Self::zero() {
            return Self::zero();
        }
        (self.ln() * e.clone()).exp()
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `+1` for nonnegative values, `-1` otherwise.
    fn sign_nonneg(&self) -> Self {
        if *self >= Self::zero() {
            Self::one()
        } else {
            -Self::one()
        }
    }

    /// Total order on non-NaN values.
    fn total_cmp_nonnan(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn backend_name() -> String {
        "binary64".to_string()
    }

    fn mantissa_bits() -> u32 {
        53
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn ln(&self) -> Self {
        f64::ln(*self)
    }

    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }

    fn powf(&self, e: &Self) -> Self {
        f64::powf(*self, *e)
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn epsilon() -> Self {
        f64::EPSILON
    }

    fn parse_decimal_str(s: &str) -> Self {
        s.trim().parse().unwrap_or(f64::NAN)
    }

    fn to_trace_string(&self) -> String {
        // LowerExp prints the shortest round-trip digits.
        format!("{:e}", self)
    }
}

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constant cache"));
}

const RM: RoundingMode = RoundingMode::ToEven;

/// Arbitrary-precision binary float with `BITS` mantissa bits.
///
/// `BITS` is rounded up to a multiple of 64 by the underlying library.
#[derive(Clone)]
pub struct BigFloat<const BITS: usize>(AstroFloat);

impl<const BITS: usize> BigFloat<BITS> {
    pub fn inner(&self) -> &AstroFloat {
        &self.0
    }

    /// Parse a decimal string such as `"0.1"` or `"1e-60"` at full precision.
    pub fn parse_decimal(s: &str) -> Self {
        CONSTS.with(|cc| BigFloat(AstroFloat::parse(s, Radix::Dec, BITS, RM, &mut cc.borrow_mut())))
    }

    /// Decimal scientific notation rounded to `digits` significant digits.
    pub fn to_sci(&self, digits: usize) -> String {
        if self.0.is_nan() {
            return "NaN".to_string();
        }
        if self.0.is_inf() {
            return if self.0.is_inf_pos() { "inf" } else { "-inf" }.to_string();
        }
        if self.0.is_zero() {
            return "0".to_string();
        }
        let formatted = CONSTS
            .with(|cc| self.0.format(Radix::Dec, RM, &mut cc.borrow_mut()))
            .unwrap_or_else(|_| "NaN".to_string());
        round_decimal_string(&formatted, digits)
    }
}

/// Round a decimal string of the form `[-]d.ddde[+-]x` to `digits` significant digits.
fn round_decimal_string(s: &str, digits: usize) -> String {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i64>().unwrap_or(0)),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(pos) => (&mant[..pos], &mant[pos + 1..]),
        None => (mant, ""),
    };
    let all: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).map(|b| b - b'0').collect();
    let lead = match all.iter().position(|&d| d != 0) {
        Some(p) => p,
        None => return "0".to_string(),
    };
    // exponent of the first significant digit
    let mut e10 = exp + int_part.len() as i64 - 1 - lead as i64;
    let sig = &all[lead..];
    let mut kept: Vec<u8> = sig.iter().take(digits).copied().collect();
    while kept.len() < digits.min(sig.len().max(1)) {
        kept.push(0);
    }
    if sig.len() > digits && sig[digits] >= 5 {
        let mut i = kept.len();
        loop {
            if i == 0 {
                kept.insert(0, 1);
                kept.pop();
                e10 += 1;
                break;
            }
            i -= 1;
            if kept[i] == 9 {
                kept[i] = 0;
            } else {
                kept[i] += 1;
                break;
            }
        }
    }
    while kept.len() > 1 && *kept.last().unwrap() == 0 {
        kept.pop();
    }
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push((b'0' + kept[0]) as char);
    if kept.len() > 1 {
        out.push('.');
        for &d in &kept[1..] {
            out.push((b'0' + d) as char);
        }
    }
    out.push_str(&format!("e{}", e10));
    out
}

impl<const BITS: usize> fmt::Debug for BigFloat<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci(40))
    }
}

impl<const BITS: usize> fmt::Display for BigFloat<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci(40))
    }
}

impl<const BITS: usize> PartialEq for BigFloat<BITS> {
    fn eq(&self, other: &Self) -> bool {
        self.0.partial_cmp(&other.0) == Some(Ordering::Equal)
    }
}

impl<const BITS: usize> PartialOrd for BigFloat<BITS> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! big_binop {
    ($tr:ident, $method:ident, $assign_tr:ident, $assign_method:ident, $call:ident) => {
        impl<const BITS: usize> $tr for BigFloat<BITS> {
            type Output = Self;
            fn $method(self, rhs: Self) -> Self {
                BigFloat(self.0.$call(&rhs.0, BITS, RM))
            }
        }

        impl<const BITS: usize> $assign_tr for BigFloat<BITS> {
            fn $assign_method(&mut self, rhs: Self) {
                self.0 = self.0.$call(&rhs.0, BITS, RM);
            }
        }
    };
}

big_binop!(Add, add, AddAssign, add_assign, add);
big_binop!(Sub, sub, SubAssign, sub_assign, sub);
big_binop!(Mul, mul, MulAssign, mul_assign, mul);
big_binop!(Div, div, DivAssign, div_assign, div);

impl<const BITS: usize> Neg for BigFloat<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        BigFloat(self.0.neg())
    }
}

impl<const BITS: usize> Scalar for BigFloat<BITS> {
    fn from_f64(v: f64) -> Self {
        BigFloat(AstroFloat::from_f64(v, BITS))
    }

    fn to_f64(&self) -> f64 {
        big_to_f64(&self.0)
    }

    fn backend_name() -> String {
        format!("bigfloat({})", BITS)
    }

    fn mantissa_bits() -> u32 {
        BITS as u32
    }

    fn sqrt(&self) -> Self {
        BigFloat(self.0.sqrt(BITS, RM))
    }

    fn abs(&self) -> Self {
        BigFloat(self.0.abs())
    }

    fn exp(&self) -> Self {
        CONSTS.with(|cc| BigFloat(self.0.exp(BITS, RM, &mut cc.borrow_mut())))
    }

    fn ln(&self) -> Self {
        CONSTS.with(|cc| BigFloat(self.0.ln(BITS, RM, &mut cc.borrow_mut())))
    }

    fn powi(&self, n: i32) -> Self {
        let p = self.0.powi(n.unsigned_abs() as usize, BITS, RM);
        if n < 0 {
            BigFloat(AstroFloat::from_f64(1.0, BITS).div(&p, BITS, RM))
        } else {
            BigFloat(p)
        }
    }

    fn powf(&self, e: &Self) -> Self {
        if self.0.is_zero() {
            return Self::zero();
        }
        CONSTS.with(|cc| BigFloat(self.0.pow(&e.0, BITS, RM, &mut cc.borrow_mut())))
    }

    fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    fn parse_decimal_str(s: &str) -> Self {
        BigFloat::parse_decimal(s.trim())
    }

    fn to_trace_string(&self) -> String {
        self.to_sci(40)
    }
}

/// Correctly rounded (to nearest, ties to even) conversion to `f64`.
fn big_to_f64(v: &AstroFloat) -> f64 {
    if v.is_nan() {
        return f64::NAN;
    }
    if v.is_inf() {
        return if v.is_inf_pos() { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    if v.is_zero() {
        return 0.0;
    }
    let Some((words, _bits, sign, exponent, _inexact)) = v.as_raw_parts() else {
        return f64::NAN;
    };
    // value = 0.m * 2^exponent with the top word holding the leading bits;
    // words are 32 bits wide on 32-bit targets, so gather the top 64 bits
    let word_bits = 8 * std::mem::size_of_val(&words[0]);
    let per = 64 / word_bits;
    let n = words.len();
    let mut w: u64 = 0;
    for k in 0..per.min(n) {
        w |= (words[n - 1 - k] as u64) << (64 - word_bits * (k + 1));
    }
    let sticky = words[..n.saturating_sub(per)].iter().any(|&w| w != 0);
    // `w as f64` rounds to nearest-even on the top 64 bits; fold the sticky
    // bits in so an exact-looking halfway case rounds up.
    if sticky && (w & 0x7ff) == 0x400 {
        w |= 1;
    }
    let mant = w as f64;
    let e = exponent as i32 - 64;
    let mag = scale_pow2(mant, e);
    if sign == Sign::Neg {
        -mag
    } else {
        mag
    }
}

fn scale_pow2(mut x: f64, mut e: i32) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e)
}

/// Euclidean dot product.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x.clone() * y.clone();
    }
    acc
}

pub fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

pub fn norm_inf<S: Scalar>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |m, x| m.max_of(x.abs()))
}

pub fn sub_vec<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn add_vec<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn scale_vec<S: Scalar>(a: &[S], c: &S) -> Vec<S> {
    a.iter().map(|x| x.clone() * c.clone()).collect()
}

pub fn to_f64_vec<S: Scalar>(a: &[S]) -> Vec<f64> {
    a.iter().map(Scalar::to_f64).collect()
}

pub fn from_f64_vec<S: Scalar>(a: &[f64]) -> Vec<S> {
    a.iter().map(|&v| S::from_f64(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    type B512 = BigFloat<512>;

    #[test]
    fn bigfloat_arithmetic_matches_f64_on_exact_values() {
        let a = B512::from_f64(1.5);
        let b = B512::from_f64(-0.25);
        assert_eq!((a.clone() + b.clone()).to_f64(), 1.25);
        assert_eq!((a.clone() * b.clone()).to_f64(), -0.375);
        assert_eq!((a / b).to_f64(), -6.0);
    }

    #[test]
    fn bigfloat_reproduces_binary64_rounding() {
        for &(x, y) in &[(0.1, 0.2), (1.0 / 3.0, 7.0), (1e-300, 3.7), (123456.789, -0.001)] {
            let bx = B512::from_f64(x);
            let by = B512::from_f64(y);
            // a correctly rounded sum of two doubles equals the double sum
            assert_eq!((bx.clone() + by.clone()).to_f64(), x + y);
            assert_eq!((bx.clone() * by.clone()).to_f64(), x * y);
            assert_eq!((bx / by).to_f64(), x / y);
        }
        assert_eq!(B512::from_f64(2.0).sqrt().to_f64(), 2f64.sqrt());
    }

    #[test]
    fn bigfloat_transcendentals() {
        let x = B512::from_f64(0.75);
        assert!((x.ln().to_f64() - 0.75f64.ln()).abs() < 1e-16);
        assert!((x.exp().to_f64() - 0.75f64.exp()).abs() < 1e-15);
        let p = x.powf(&B512::from_f64(2.5));
        assert!((p.to_f64() - 0.75f64.powf(2.5)).abs() < 1e-16);
        assert!(B512::epsilon().to_f64() < 1e-150);
    }

    #[test]
    fn bigfloat_parses_and_prints_decimal() {
        let v = B512::parse_decimal("1e-60");
        assert!((v.to_f64() / 1e-60 - 1.0).abs() < 1e-15);
        assert_eq!(B512::from_f64(0.5).to_sci(40), "5e-1");
        assert_eq!(B512::from_f64(-1.25).to_sci(3), "-1.25e0");
        let third = B512::one() / B512::from_f64(3.0);
        let s = third.to_sci(40);
        assert!(s.starts_with("3.333333333333333333333333333333333333333e-1"), "{s}");
    }

    #[test]
    fn decimal_rounding_carries() {
        assert_eq!(round_decimal_string("9.996e3", 3), "1e4");
        assert_eq!(round_decimal_string("-1.2345e-7", 4), "-1.235e-7");
        assert_eq!(round_decimal_string("0.00012", 5), "1.2e-4");
    }

    #[test]
    fn f64_trace_format_is_round_trip() {
        for &v in &[0.1, 1e-300, -2.5, 123456789.125] {
            let s = v.to_trace_string();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
