//! Per-iteration run records and their CSV form.

use serde::Serialize;

use crate::scalar::Scalar;

pub const CSV_HEADER: &str = "j,eps,f,dist,bundle_size,inner_iters,oracle_calls,boundary_active,gap,crit";

/// One outer iteration of the local method.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<S> {
    pub j: usize,
    pub eps: S,
    /// `f(x^j)`.
    pub f: S,
    /// `‖x^j − x*‖` in the trust-region norm when `x*` is known.
    pub dist: Option<S>,
    pub bundle_size: usize,
    pub inner_iters: usize,
    /// Cumulative jet evaluations up to and including this iteration.
    pub oracle_calls: usize,
    pub boundary_active: bool,
    /// Final gap test value of the iteration.
    pub gap: S,
    pub crit: S,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace<S> {
    pub rows: Vec<TraceRow<S>>,
}

impl<S: Scalar> RunTrace<S> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let dist = r.dist.as_ref().map(Scalar::to_trace_string).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.j,
                r.eps.to_trace_string(),
                r.f.to_trace_string(),
                dist,
                r.bundle_size,
                r.inner_iters,
                r.oracle_calls,
                u8::from(r.boundary_active),
                r.gap.to_trace_string(),
                r.crit.to_trace_string(),
            ));
        }
        out
    }
}

/// Exact oracle accounting for a whole run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub oracle_calls: usize,
    pub objective_evals: usize,
    pub inner_iterations: usize,
    pub degraded_solves: usize,
    pub max_inner_exceeded: usize,
    pub duplicate_centers: usize,
}

impl std::ops::AddAssign for Totals {
    fn add_assign(&mut self, o: Self) {
        self.oracle_calls += o.oracle_calls;
        self.objective_evals += o.objective_evals;
        self.inner_iterations += o.inner_iterations;
        self.degraded_solves += o.degraded_solves;
        self.max_inner_exceeded += o.max_inner_exceeded;
        self.duplicate_centers += o.duplicate_centers;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = RunTrace {
            rows: vec![TraceRow {
                j: 1,
                eps: 0.5,
                f: 0.1,
                dist: None,
                bundle_size: 2,
                inner_iters: 1,
                oracle_calls: 2,
                boundary_active: true,
                gap: 1e-3,
                crit: 0.0,
            }],
        };
        assert_eq!(t.to_csv(), format!("{CSV_HEADER}\n1,5e-1,1e-1,,2,1,2,1,1e-3,0e0\n"));
    }
}
