//! Higher-order cutting-plane trust-region methods for nonsmooth minimization.

pub mod acceptance;
pub mod bundle_loop;
pub mod diagnostics;
pub mod drivers;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod subproblem;
pub mod taylor;
pub mod trace;
