//! The super-linearly vanishing radius sequence `ε_j = ε₁ κ^(Q^(j−1) − 1)`
//! with `Q = (q + σ)/p`.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("ε₁ must be positive")]
    NonPositiveRadius,
    #[error("κ must lie in (0,1), got {0}")]
    Kappa(f64),
    #[error("σ must lie in (0,1), got {0}")]
    Sigma(f64),
    #[error("need q ≥ 1 and p ≥ 1, got q = {q}, p = {p}")]
    Orders { q: usize, p: u32 },
    #[error("Q = (q+σ)/p must exceed 1, got {0}")]
    NotSuperlinear(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsSchedule<S> {
    pub eps1: S,
    pub kappa: S,
    pub sigma: S,
    pub q: usize,
    pub p: u32,
}

impl<S: Scalar> EpsSchedule<S> {
    pub fn new(eps1: S, kappa: S, sigma: S, q: usize, p: u32) -> Result<Self, ScheduleError> {
        if !(eps1 > S::zero()) {
            return Err(ScheduleError::NonPositiveRadius);
        }
        if !(kappa > S::zero() && kappa < S::one()) {
            return Err(ScheduleError::Kappa(kappa.to_f64()));
        }
        if !(sigma > S::zero() && sigma < S::one()) {
            return Err(ScheduleError::Sigma(sigma.to_f64()));
        }
        if q == 0 || p == 0 {
            return Err(ScheduleError::Orders { q, p });
        }
        let s = EpsSchedule { eps1, kappa, sigma, q, p };
        if !(s.order() > S::one()) {
            return Err(ScheduleError::NotSuperlinear(s.order().to_f64()));
        }
        Ok(s)
    }

    /// `Q = (q + σ)/p`.
    pub fn order(&self) -> S {
        (S::from_usize(self.q) + self.sigma.clone()) / S::from_f64(self.p as f64)
    }

    /// `ε_j` for `j ≥ 1`.
    pub fn eps_at(&self, j: usize) -> S {
        assert!(j >= 1, "schedule index starts at 1");
        if j == 1 {
            return self.eps1.clone();
        }
        let e = self.order().powi(j as i32 - 1) - S::one();
        self.eps1.clone() * self.kappa.powf(&e)
    }

    /// Gap-test threshold `ε^(q+σ)`.
    pub fn gap_threshold(&self, eps: &S) -> S {
        eps.powf(&(S::from_usize(self.q) + self.sigma.clone()))
    }

    /// `C = Σ_{l≥0} κ^(Q^l − 1)`, summed until a term drops below 1e-30.
    pub fn cauchy_constant(&self) -> f64 {
        cauchy_constant(self.kappa.to_f64(), self.order().to_f64())
    }
}

pub fn cauchy_constant(kappa: f64, big_q: f64) -> f64 {
    let mut sum = 0.0;
    let mut ql = 1.0f64;
    for _ in 0..10_000 {
        let term = kappa.powf(ql - 1.0);
        if term < 1e-30 {
            break;
        }
        sum += term;
        ql *= big_q;
    }
    sum
}
