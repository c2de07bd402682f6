//! Writes the maxeig instance used by the bundled ex63 config, together with
//! a reference minimizer from a long run of the globalized method.
//!
//! cargo run --release -p hocp --example ex63_reference -- <out.json> [seed n m]

use hocp::bundle_loop::BundleInit;
use hocp::drivers::{run_global, GlobalConfig, GlobalStatus, LocalConfig};
use hocp::problems::{generate_maxeig_instance, MaxEig, Problem};
use hocp::schedule::EpsSchedule;
use hocp::subproblem::{Norm, SolverOptions, Strategy};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args.first().expect("usage: ex63_reference <out.json> [seed n m]");
    let num = |i: usize, d: u64| args.get(i).map(|s| s.parse::<u64>().expect("integer argument")).unwrap_or(d);
    let (seed, n, m) = (num(1, 1), num(2, 50) as usize, num(3, 25) as usize);

    let mut inst = generate_maxeig_instance(seed, n, m).expect("instance");
    let problem = MaxEig::<f64>::new(&inst).expect("valid instance");
    let cfg = GlobalConfig {
        delta1: 0.5,
        theta_delta: 0.5,
        tau1: 0.1,
        theta_tau: 0.5,
        p: 2,
        max_outer: 40,
        max_phase_steps: 200,
        local_budget: 400,
        local: LocalConfig {
            schedule: EpsSchedule::new(0.5, 0.75, 0.5, 2, 2).expect("schedule"),
            norm: Norm::Euclidean,
            strategy: Strategy::Smoothed,
            init: BundleInit::MemoryReuse,
            // the cuts are convex quadratics, so few starts suffice
            solver: SolverOptions { n_rand: Some(4), ..SolverOptions::default() },
            eps_thr: 1e-5,
            max_iter: 400,
            max_inner: None,
            stop_on_active: true,
        },
    };
    let r = run_global(&problem, &vec![0.0; n], &cfg).expect("global run");
    assert_eq!(r.status, GlobalStatus::Converged, "reference run did not converge");
    println!("f = {:e}, oracle calls {}", r.f, r.totals.oracle_calls);
    println!("f at reference via oracle = {:e}", Problem::<f64>::value(&problem, &r.x));
    inst.reference = Some(r.x);
    std::fs::write(out, serde_json::to_string_pretty(&inst).expect("serializable") + "\n").expect("write instance");
}
