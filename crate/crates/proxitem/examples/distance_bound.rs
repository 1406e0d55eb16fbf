//! The exact distance bound on composite instances: along every run,
//! `||z^k - x*||^2 <= (1 + q A_k)^{-1} ||x0 - x*||^2`.
//!
//! Run with `cargo run --example distance_bound`.

use proxitem::bench::{builtin_instance, seeded_start};
use proxitem::certificates::SolutionCertificate;
use proxitem::schedule::Schedule;
use proxitem::solvers::{run_method, Method};

fn main() {
    for id in ["box-qp", "lasso-sc", "halfspace"] {
        let instance = builtin_instance(id, None).unwrap();
        let q = instance.params().q();
        let cert = SolutionCertificate::compute(&instance, 1e-12).unwrap();
        let x0 = seeded_start(instance.dim(), 2);
        let horizon = 60;
        let trace = run_method(&instance, Method::ProxItem, &x0, horizon).unwrap();
        let schedule = Schedule::generate(q, horizon).unwrap();
        let d0_sq = x0.distance_sq(&cert.x_star);

        println!("{id} (dim {}, q = {q:.4}):", instance.dim());
        println!("{:>4} {:>14} {:>14} {:>10}", "k", "||z^k - x*||^2", "bound", "ratio");
        for k in (0..=horizon).step_by(6) {
            let lhs = trace.z_at(k).distance_sq(&cert.x_star);
            let rhs = d0_sq / (1.0 + q * schedule.state(k).a);
            println!("{k:>4} {lhs:>14.6e} {rhs:>14.6e} {:>10.6}", lhs / rhs);
        }
        println!();
    }
}
