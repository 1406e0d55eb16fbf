//! The two extreme quadratics attain the distance bound with equality: the
//! squared distance times `1 + q A_k` stays constant along the run, and on
//! `f = L/2 ||.||^2` the iterate flips sign every step.
//!
//! Run with `cargo run --example tight_instance [q]` (default q = 0.25).

use proxitem::bench::{builtin_instance, seeded_start};
use proxitem::problem::ProblemClassParams;
use proxitem::solvers::{run_method, Method};

fn main() {
    let q: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("q must be a number in (0, 1)"))
        .unwrap_or(0.25);
    let params = ProblemClassParams::new(4.0 * q, 4.0).expect("valid class");

    for family in ["tight-L", "tight-mu"] {
        let instance = builtin_instance(family, Some(params)).unwrap();
        let x0 = seeded_start(instance.dim(), 1);
        let trace = run_method(&instance, Method::ProxItem, &x0, 30).unwrap();
        let d0_sq = x0.norm_sq();

        println!("{family} (q = {q}): x* = 0, ||x0||^2 = {d0_sq:.6}");
        println!("{:>4} {:>14} {:>22} {:>8}", "k", "||z^k - x*||^2", "ratio to the bound", "sign");
        for k in (0..=30).step_by(3) {
            let z = trace.z_at(k);
            let a = trace.schedule_history[k].a;
            let ratio = z.norm_sq() * (1.0 + q * a) / d0_sq;
            let sign = if z.dot(&x0) >= 0.0 { "+" } else { "-" };
            println!("{k:>4} {:>14.6e} {ratio:>22.12} {sign:>8}", z.norm_sq());
        }
        println!();
    }
    println!("a ratio of exactly 1 means the worst-case bound is attained.");
}
