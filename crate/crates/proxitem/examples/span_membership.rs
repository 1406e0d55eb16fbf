//! The iterates of the nonstationary method stay in the span of the oracle
//! outputs: `z^k - x^0` projects onto the recorded gradients and scaled prox
//! displacements with negligible residual. A trace tampered with along a
//! direction the oracles never produced is rejected.
//!
//! Run with `cargo run --example span_membership`.

use proxitem::certificates::check_span_membership;
use proxitem::problem::{make_quadratic_instance, GSpec};
use proxitem::solvers::{run_method, Method};
use proxitem::Vector;

fn main() {
    // last coordinate of x0 and b is zero, so no oracle output touches it
    let instance = make_quadratic_instance(
        "span-demo",
        Vector::new(vec![1.0, 2.5, 4.0, 2.0]).unwrap(),
        Vector::new(vec![2.0, -3.2, 0.3, 0.0]).unwrap(),
        GSpec::L1 { lambda: 1.0 },
    )
    .unwrap();
    let x0 = Vector::new(vec![1.7, -0.4, 0.9, 0.0]).unwrap();
    let trace = run_method(&instance, Method::ProxItem, &x0, 10).unwrap();

    let clean = check_span_membership(&instance, &trace, true).unwrap();
    println!("clean trace, per-k span membership: {clean:?}");

    let mut tampered = trace.clone();
    let mut entries: Vec<f64> = tampered.records[3].z.as_slice().to_vec();
    entries[3] += 1e-3;
    tampered.records[3].z = Vector::new(entries).unwrap();
    let flagged = check_span_membership(&instance, &tampered, true).unwrap();
    println!("z^3 nudged off-span:                {flagged:?}");
    assert!(!flagged[3], "the tampered index must be rejected");
    println!("the tampered iterate at k = 3 is correctly rejected");
}
