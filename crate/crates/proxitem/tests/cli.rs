//! End-to-end checks of the `proxitem` binary: subcommands, flag handling,
//! and the exit-status contract (0 pass, 2 certificate failure,
//! 3 configuration error, 4 numeric overflow).

use std::path::Path;
use std::process::Command;

use proxitem::problem::{make_quadratic_instance, GSpec};
use proxitem::solvers::{run_method, Method, TraceMeta};
use proxitem::Vector;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxitem"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn schedule_subcommand_prints_csv_with_limits() {
    let out = bin().args(["schedule", "0.25", "--horizon", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,A_k,sigma_k,beta_k,delta_k,p0,p1,p2,p3");
    assert!(lines[2].starts_with("1,7.111111111111111"));
    assert!(lines.last().unwrap().starts_with("limits,0.3333333333333333,2,0.25,0.5"));
}

#[test]
fn schedule_rejects_bad_q_with_status_3() {
    let out = bin().args(["schedule", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_happy_path_exits_zero_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"instances": ["box-qp"], "methods": ["prox_item"], "horizon": 12,
                "seeds": [7], "output_dir": "{}", "check_certificates": true}}"#,
            out_dir.display()
        ),
    );
    let out = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("box-qp__prox_item__seed7.trace.csv").exists());
    assert!(out_dir.join("box-qp__prox_item__seed7.meta.json").exists());
    assert!(out_dir.join("box-qp__prox_item__seed7.report.json").exists());
    assert!(out_dir.join("summary.csv").exists());
}

#[test]
fn run_empty_methods_is_config_error_3() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("never");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"instances": ["box-qp"], "methods": [], "horizon": 5,
                "seeds": [0], "output_dir": "{}"}}"#,
            out_dir.display()
        ),
    );
    let out = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_dir.exists(), "no files may be written on config errors");
}

#[test]
fn run_overflowing_horizon_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("never");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"instances": ["tight-L"], "methods": ["prox_item"], "horizon": 1000,
                "seeds": [0], "output_dir": "{}"}}"#,
            out_dir.display()
        ),
    );
    let out = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists());
}

#[test]
fn class_override_flags_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"instances": ["tight-L"], "methods": ["prox_item"], "horizon": 8,
                "seeds": [0, 1], "output_dir": "{}"}}"#,
            out_dir.display()
        ),
    );
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--mu", "0.25", "--L", "1", "--seed", "9", "--horizon", "6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // overridden class and seed appear in the artifact names
    let trace = out_dir.join("tight-L-mu0.25-L1__prox_item__seed9.trace.csv");
    assert!(trace.exists());
    // horizon override: 6 rows + header
    let rows = std::fs::read_to_string(&trace).unwrap().lines().count();
    assert_eq!(rows, 7);
    // --mu without --L is rejected
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--mu", "0.25"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn env_var_overrides_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from-env");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"instances": ["box-qp"], "methods": ["prox_grad"], "horizon": 5,
                "seeds": [0], "output_dir": "{}", "check_certificates": false}}"#,
            dir.path().join("from-config").display()
        ),
    );
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .env("PROXITEM_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.join("box-qp__prox_grad__seed0.trace.csv").exists());
    assert!(!dir.path().join("from-config").exists());
}

#[test]
fn audit_of_emitted_trace_passes_and_tampered_trace_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"instances": ["lasso-sc"], "methods": ["prox_item", "prox_grad"], "horizon": 10,
                "seeds": [1], "output_dir": "{}"}}"#,
            out_dir.display()
        ),
    );
    let out = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    // fresh traces audit clean, including the baseline where the Lyapunov
    // and slack machinery is skipped
    for name in ["lasso-sc__prox_item__seed1", "lasso-sc__prox_grad__seed1"] {
        let trace = out_dir.join(format!("{name}.trace.csv"));
        let out = bin().arg("audit").arg(&trace).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join(format!("{name}.audit.json")).exists());
    }

    // tampering layer one: an inconsistent file (z nudged, subgradient left
    // as recorded) is rejected at parse time as malformed
    let instance = make_quadratic_instance(
        "tampered",
        Vector::new(vec![1.0, 2.5, 4.0, 2.0]).unwrap(),
        Vector::new(vec![2.0, -3.2, 0.3, 0.0]).unwrap(),
        GSpec::L1 { lambda: 1.0 },
    )
    .unwrap();
    let x0 = Vector::new(vec![1.7, -0.4, 0.9, 0.0]).unwrap();
    let clean = run_method(&instance, Method::ProxItem, &x0, 8).unwrap();
    let meta = TraceMeta::for_trace(&clean, &instance, None).unwrap();
    let nudge = |trace: &proxitem::solvers::Trace, fix_subgradient: bool| {
        let mut t = trace.clone();
        let mut entries: Vec<f64> = t.records[3].z.as_slice().to_vec();
        entries[3] += 1e-3;
        t.records[3].z = Vector::new(entries).unwrap();
        if fix_subgradient {
            // forge a self-consistent file: recompute the recorded
            // subgradient from the tampered displacement
            let rec2 = &t.records[2];
            let l = t.params.lipschitz();
            t.records[2].s_g_next = rec2
                .zbar_next
                .sub(&t.records[3].z)
                .scaled(l / rec2.delta);
        }
        t
    };
    std::fs::write(
        out_dir.join("tampered.meta.json"),
        serde_json::to_string_pretty(&meta).unwrap(),
    )
    .unwrap();
    std::fs::write(
        out_dir.join("tampered.trace.csv"),
        nudge(&clean, false).to_csv(),
    )
    .unwrap();
    let out = bin()
        .arg("audit")
        .arg(out_dir.join("tampered.trace.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    // tampering layer two: a self-consistent forgery parses cleanly but the
    // certificate checks reject it
    std::fs::write(
        out_dir.join("tampered.trace.csv"),
        nudge(&clean, true).to_csv(),
    )
    .unwrap();
    let out = bin()
        .arg("audit")
        .arg(out_dir.join("tampered.trace.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn audit_missing_sidecar_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let orphan = dir.path().join("orphan.trace.csv");
    std::fs::write(&orphan, "k\n").unwrap();
    let out = bin().arg("audit").arg(&orphan).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}
