//! Distance-to-solution comparison of all four methods on one instance.
//!
//! Run with `cargo run --example method_comparison [instance-id]`.

use proxitem::bench::{builtin_instance, seeded_start};
use proxitem::certificates::SolutionCertificate;
use proxitem::solvers::{run_method, Method};

fn main() {
    let id = std::env::args().nth(1).unwrap_or_else(|| "lasso-sc".into());
    let instance = builtin_instance(&id, None).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(3);
    });
    let cert = SolutionCertificate::compute(&instance, 1e-12).unwrap();
    let x0 = seeded_start(instance.dim(), 1);
    let horizon = 120;

    let traces: Vec<_> = Method::ALL
        .iter()
        .map(|&m| (m, run_method(&instance, m, &x0, horizon).unwrap()))
        .collect();

    println!(
        "{id}: dim {}, q = {:.4}, ||x0 - x*|| = {:.4}",
        instance.dim(),
        instance.params().q(),
        x0.distance(&cert.x_star)
    );
    print!("{:>4}", "k");
    for (m, _) in &traces {
        print!(" {:>14}", m.name());
    }
    println!();
    for k in (0..=horizon).step_by(10) {
        print!("{k:>4}");
        for (_, trace) in &traces {
            print!(" {:>14.6e}", trace.z_at(k).distance(&cert.x_star));
        }
        println!();
    }
}
