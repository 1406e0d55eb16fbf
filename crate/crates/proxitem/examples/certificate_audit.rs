//! Full certificate evaluation on a fresh trace: Lyapunov values, slack
//! identities, polynomial coefficients, distance bounds, span membership,
//! and the interpolation audit of the oracle data.
//!
//! Run with `cargo run --example certificate_audit`.

use proxitem::bench::{builtin_instance, seeded_start};
use proxitem::certificates::{evaluate_certificates, SolutionCertificate};
use proxitem::solvers::{run_method, Method};

fn main() {
    let instance = builtin_instance("lasso-sc", None).unwrap();
    let cert = SolutionCertificate::compute(&instance, 1e-12).unwrap();
    let x0 = seeded_start(instance.dim(), 3);
    let trace = run_method(&instance, Method::ProxItem, &x0, 40).unwrap();
    let report = evaluate_certificates(&instance, &trace, &cert).unwrap();

    let v = report.v.as_ref().unwrap();
    let s = report.s.as_ref().unwrap();
    let p3 = report.p3.as_ref().unwrap();
    println!("lasso-sc, nonstationary method, horizon 40");
    println!("{:>4} {:>14} {:>12} {:>12} {:>14}", "k", "V_k", "S_k", "p3_k", "||z^k - x*||^2");
    for k in (0..40).step_by(4) {
        println!(
            "{k:>4} {:>14.6e} {:>12.3e} {:>12.3e} {:>14.6e}",
            v[k], s[k], p3[k], report.bound_lhs[k]
        );
    }

    let summary = &report.summary;
    println!();
    println!("lyapunov monotone:   {:?}", summary.lyapunov_monotone);
    println!("distance bounds:     {:?}", summary.bound_holds);
    println!("slack identically 0: {:?}", summary.slack_zero);
    println!("span membership:     {:?}", summary.span_member);
    println!(
        "interpolation:       {} smooth pairs, {} convex pairs, min scaled residual {:.2e}",
        summary.interpolation_f.pair_count,
        summary.interpolation_g.pair_count,
        summary
            .interpolation_f
            .min_scaled_residual
            .min(summary.interpolation_g.min_scaled_residual),
    );
    println!("overall:             {}", if summary.passed { "pass" } else { "FAIL" });
}
