//! Building a problem by hand: a diagonal quadratic with an elastic-style
//! scaled squared-norm term, saved to the instance document format and
//! loaded back, then solved and certified end to end.
//!
//! Run with `cargo run --example custom_instance`.

use proxitem::bench::{cmd_run, RunConfig};
use proxitem::problem::{make_quadratic_instance, GSpec};
use proxitem::solvers::Method;
use proxitem::Vector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let instance = make_quadratic_instance(
        "custom-ridge",
        Vector::new(vec![1.0, 3.0, 6.0, 2.0]).unwrap(),
        Vector::new(vec![4.0, -1.0, 2.5, 0.5]).unwrap(),
        GSpec::SqL2 { lambda: 0.75 },
    )?;
    println!(
        "instance {}: q = {}, known solution {:?}",
        instance.id(),
        instance.params().q(),
        instance.known_solution().unwrap().as_slice()
    );

    let dir = std::env::temp_dir().join("proxitem-custom-instance");
    std::fs::create_dir_all(&dir)?;
    let doc_path = dir.join("custom-ridge.json");
    std::fs::write(
        &doc_path,
        serde_json::to_string_pretty(&instance.to_doc().unwrap())?,
    )?;
    println!("wrote {}", doc_path.display());

    let config = RunConfig {
        instances: vec![doc_path.to_string_lossy().into_owned()],
        methods: vec![Method::ProxItem, Method::ProxTmm],
        horizon: 50,
        q_overrides: None,
        seeds: vec![0, 1],
        output_dir: dir.clone(),
        check_certificates: true,
    };
    let outcome = cmd_run(&config)?;
    for cell in &outcome.cells {
        println!(
            "{:<24} seed {} -> {} ({})",
            cell.method.name(),
            cell.seed,
            cell.trace_path.display(),
            if cell.report.as_ref().unwrap().summary.passed {
                "certificates pass"
            } else {
                "certificates FAIL"
            }
        );
    }
    println!("summary: {}", outcome.summary_path.unwrap().display());
    Ok(())
}
