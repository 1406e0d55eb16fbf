//! Benchmark front end: resolves instances, runs method sweeps, writes
//! trace/report artifacts, and audits previously written traces.
//!
//! All artifact files derive their names from the `(instance, method, seed)`
//! triple, so concurrent runs never write the same path. Numeric text uses
//! shortest round-trip formatting: identical configs produce byte-identical
//! files, and re-parsing is exact.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificates::{evaluate_certificates, CertificateReport, SolutionCertificate};
use crate::problem::{
    make_quadratic_instance, make_quadratic_instance_with_class, CompositeInstance, GSpec,
    InstanceDoc, ProblemClassParams,
};
use crate::schedule::{schedule_limits, Schedule};
use crate::solvers::{run_method, Method, Trace, TraceMeta};
use crate::{Error, Result, Vector};

/// Reference-solution tolerance used by `run` and `audit`.
pub const REFERENCE_TOL: f64 = 1e-12;

/// Fixed generator seeds for the randomized built-in instances; the
/// instances themselves are deterministic, only starting points vary by
/// user seed.
const LASSO_GEN_SEED: u64 = 7;
const HALFSPACE_GEN_SEED: u64 = 11;

/// A benchmark run: which instances, which methods, how long, where.
/// Mirrors the JSON config file field for field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Built-in instance ids or paths to instance JSON documents.
    pub instances: Vec<String>,
    pub methods: Vec<Method>,
    pub horizon: usize,
    /// Optional `(mu, L)` class sweeps applied to every instance.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q_overrides: Option<Vec<(f64, f64)>>,
    /// Seeds for randomized starting points, one run per seed.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub check_certificates: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("bad run config: {e}")))?;
        Ok(config)
    }
}

pub const BUILTIN_IDS: [&str; 5] = ["tight-L", "tight-mu", "box-qp", "lasso-sc", "halfspace"];

/// Resolves a built-in id into an instance, optionally with an overridden
/// curvature class.
///
/// The extreme-quadratic families rebuild their diagonal from the requested
/// class (`diag = L` resp. `diag = mu` throughout); the fixed families keep
/// their diagonal and require the override to widen their natural class.
pub fn builtin_instance(
    id: &str,
    class: Option<ProblemClassParams>,
) -> Result<CompositeInstance> {
    let instance = match id {
        "tight-L" => {
            let params = class.unwrap_or(ProblemClassParams::new(1.0, 4.0)?);
            make_quadratic_instance_with_class(
                &override_id(id, class),
                Vector::filled(4, params.lipschitz())?,
                Vector::zeros(4),
                GSpec::Zero,
                params,
            )?
        }
        "tight-mu" => {
            let params = class.unwrap_or(ProblemClassParams::new(1.0, 4.0)?);
            make_quadratic_instance_with_class(
                &override_id(id, class),
                Vector::filled(4, params.mu())?,
                Vector::zeros(4),
                GSpec::Zero,
                params,
            )?
        }
        "box-qp" => {
            let base = make_quadratic_instance(
                &override_id(id, class),
                Vector::new(vec![1.0, 4.0])?,
                Vector::new(vec![2.0, 8.0])?,
                GSpec::Box {
                    lo: Vector::zeros(2),
                    hi: Vector::filled(2, 1.0)?,
                },
            )?;
            match class {
                Some(params) => base.with_class(params)?,
                None => base,
            }
        }
        "lasso-sc" => {
            let params = class.unwrap_or(ProblemClassParams::new(1.0, 10.0)?);
            lasso_sc(&override_id(id, class), params)?
        }
        "halfspace" => {
            let params = class.unwrap_or(ProblemClassParams::new(1.0, 8.0)?);
            halfspace(&override_id(id, class), params)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown built-in instance '{other}'; known ids: {BUILTIN_IDS:?}"
            )))
        }
    };
    Ok(instance)
}

fn override_id(base: &str, class: Option<ProblemClassParams>) -> String {
    match class {
        None => base.to_string(),
        Some(p) => format!("{base}-mu{}-L{}", p.mu(), p.lipschitz()),
    }
}

/// Diagonal quadratic plus `||.||_1` with the class endpoints forced into
/// the diagonal. Right-hand side entries keep a 0.3 margin from the
/// soft-threshold boundary so the solution support is numerically clean;
/// every third coordinate is inactive (zero in the solution).
fn lasso_sc(id: &str, params: ProblemClassParams) -> Result<CompositeInstance> {
    let dim = 24;
    let lambda = 1.0;
    let (mu, l) = (params.mu(), params.lipschitz());
    let mut rng = ChaCha8Rng::seed_from_u64(LASSO_GEN_SEED);
    let mut diag = vec![0.0; dim];
    diag[0] = mu;
    diag[1] = l;
    for d in diag.iter_mut().skip(2) {
        *d = rng.gen_range(mu..l);
    }
    let mut b = vec![0.0; dim];
    for (i, bi) in b.iter_mut().enumerate() {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let t: f64 = rng.gen_range(0.0..1.0);
        *bi = if i % 3 == 2 {
            sign * t * (lambda - 0.3)
        } else {
            sign * (lambda + 0.3 + 8.0 * t)
        };
    }
    make_quadratic_instance_with_class(
        id,
        Vector::new(diag)?,
        Vector::new(b)?,
        GSpec::L1 { lambda },
        params,
    )
}

/// Diagonal quadratic over the nonnegative orthant; roughly half the
/// coordinates are constrained at the boundary, with a 0.5 gradient margin.
fn halfspace(id: &str, params: ProblemClassParams) -> Result<CompositeInstance> {
    let dim = 20;
    let (mu, l) = (params.mu(), params.lipschitz());
    let mut rng = ChaCha8Rng::seed_from_u64(HALFSPACE_GEN_SEED);
    let mut diag = vec![0.0; dim];
    diag[0] = mu;
    diag[1] = l;
    for d in diag.iter_mut().skip(2) {
        *d = rng.gen_range(mu..l);
    }
    let mut b = vec![0.0; dim];
    for bi in b.iter_mut() {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let t: f64 = rng.gen_range(0.0..1.0);
        *bi = sign * (0.5 + 7.5 * t);
    }
    make_quadratic_instance_with_class(
        id,
        Vector::new(diag)?,
        Vector::new(b)?,
        GSpec::NonNeg,
        params,
    )
}

/// Resolves a config entry: a built-in id or a path to an instance document.
pub fn resolve_instance(
    entry: &str,
    class: Option<ProblemClassParams>,
) -> Result<CompositeInstance> {
    if BUILTIN_IDS.contains(&entry) {
        return builtin_instance(entry, class);
    }
    let path = Path::new(entry);
    if !path.exists() {
        return Err(Error::Config(format!(
            "'{entry}' is neither a built-in id ({BUILTIN_IDS:?}) nor an existing file"
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let mut doc: InstanceDoc = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad instance document {entry}: {e}")))?;
    // suffix overridden ids the same way built-ins do, so one file swept
    // over several classes never collides on artifact paths
    doc.id = override_id(&doc.id, class);
    let instance = doc.into_instance()?;
    match class {
        Some(params) => instance.with_class(params),
        None => Ok(instance),
    }
}

/// Deterministic starting point for one seed: entries uniform in `[-2, 2]`.
pub fn seeded_start(dim: usize, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Vector::new((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .expect("finite start point")
}

/// One `(instance, method, seed)` cell of a finished run.
#[derive(Debug)]
pub struct RunCell {
    pub instance_id: String,
    pub method: Method,
    pub seed: u64,
    pub trace_path: PathBuf,
    pub report: Option<CertificateReport>,
}

/// Outcome of [`cmd_run`].
#[derive(Debug)]
pub struct RunOutcome {
    pub cells: Vec<RunCell>,
    pub summary_path: Option<PathBuf>,
    /// False when any certificate check failed.
    pub all_passed: bool,
    pub failures: Vec<String>,
}

fn slug(instance_id: &str, method: Method, seed: u64) -> String {
    format!("{instance_id}__{method}__seed{seed}")
}

/// Runs the configured sweep. Writes one trace CSV and JSON sidecar per
/// `(instance, method, seed)`; with `check_certificates`, also writes one
/// certificate report (JSON + CSV mirror) per run and a `summary.csv` with
/// per-iteration distances against the exact bound.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome> {
    if config.methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    if config.instances.is_empty() {
        return Err(Error::Config("no instances selected".into()));
    }
    if config.seeds.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    let mut methods_seen = BTreeSet::new();
    for m in &config.methods {
        if !methods_seen.insert(m.name()) {
            return Err(Error::Config(format!("method {m} listed twice")));
        }
    }

    let overrides: Vec<Option<ProblemClassParams>> = match &config.q_overrides {
        None => vec![None],
        Some(list) if list.is_empty() => vec![None],
        Some(list) => {
            let mut out = Vec::with_capacity(list.len());
            for &(mu, l) in list {
                out.push(Some(ProblemClassParams::new(mu, l)?));
            }
            out
        }
    };

    // resolve everything before writing any file
    let mut resolved: Vec<CompositeInstance> = Vec::new();
    for entry in &config.instances {
        for class in &overrides {
            let instance = resolve_instance(entry, *class)?;
            if config.methods.contains(&Method::ProxItem) {
                // fail fast on horizons past the recursion's range
                Schedule::generate(instance.params().q(), config.horizon)?;
            }
            resolved.push(instance);
        }
    }

    std::fs::create_dir_all(&config.output_dir)?;

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let mut summary = String::from("instance,method,seed,k,dist_sq,theorem_bound,ratio\n");

    for instance in &resolved {
        let q = instance.params().q();
        let reference_bound = Schedule::generate(q, config.horizon).ok();
        let cert = if config.check_certificates {
            Some(SolutionCertificate::compute(instance, REFERENCE_TOL)?)
        } else {
            None
        };
        for &method in &config.methods {
            for &seed in &config.seeds {
                let x0 = seeded_start(instance.dim(), seed);
                let trace = run_method(instance, method, &x0, config.horizon)?;
                let name = slug(instance.id(), method, seed);
                let trace_path = config.output_dir.join(format!("{name}.trace.csv"));
                std::fs::write(&trace_path, trace.to_csv())?;
                let meta = TraceMeta::for_trace(&trace, instance, Some(seed))?;
                std::fs::write(
                    config.output_dir.join(format!("{name}.meta.json")),
                    serde_json::to_string_pretty(&meta)?,
                )?;

                let report = if let Some(cert) = &cert {
                    let report = evaluate_certificates(instance, &trace, cert)?;
                    std::fs::write(
                        config.output_dir.join(format!("{name}.report.json")),
                        serde_json::to_string_pretty(&report)?,
                    )?;
                    std::fs::write(
                        config.output_dir.join(format!("{name}.report.csv")),
                        report.to_csv(),
                    )?;
                    if !report.summary.passed {
                        failures.push(format!("{name}: certificate checks failed"));
                    }
                    append_summary_rows(
                        &mut summary,
                        instance.id(),
                        method,
                        seed,
                        &trace,
                        cert,
                        reference_bound.as_ref(),
                    );
                    Some(report)
                } else {
                    None
                };

                cells.push(RunCell {
                    instance_id: instance.id().to_string(),
                    method,
                    seed,
                    trace_path,
                    report,
                });
            }
        }
    }

    let summary_path = if config.check_certificates {
        let path = config.output_dir.join("summary.csv");
        std::fs::write(&path, summary)?;
        Some(path)
    } else {
        None
    };

    Ok(RunOutcome {
        cells,
        summary_path,
        all_passed: failures.is_empty(),
        failures,
    })
}

fn append_summary_rows(
    summary: &mut String,
    instance_id: &str,
    method: Method,
    seed: u64,
    trace: &Trace,
    cert: &SolutionCertificate,
    reference: Option<&Schedule>,
) {
    let q = trace.params.q();
    let dist0_sq = trace.x0.distance_sq(&cert.x_star);
    for k in 0..=trace.horizon() {
        let dist_sq = trace.z_at(k).distance_sq(&cert.x_star);
        let bound = reference.map(|s| dist0_sq / (1.0 + q * s.state(k).a));
        let (bound_cell, ratio_cell) = match bound {
            Some(b) if b > 0.0 => (format!("{b}"), format!("{}", dist_sq / b)),
            Some(b) => (format!("{b}"), String::new()),
            None => (String::new(), String::new()),
        };
        summary.push_str(&format!(
            "{instance_id},{method},{seed},{k},{dist_sq},{bound_cell},{ratio_cell}\n"
        ));
    }
}

/// Schedule dump with a trailing limits row:
/// `limits,<beta>,<delta>,<A_ratio>,<sigma_over_A>`.
pub fn cmd_schedule(q: f64, horizon: usize) -> Result<String> {
    let schedule = Schedule::generate(q, horizon)?;
    let limits = schedule_limits(q)?;
    let mut out = schedule.to_csv();
    out.push_str(&format!(
        "limits,{},{},{},{}\n",
        limits.beta, limits.delta, limits.a_ratio, limits.sigma_over_a
    ));
    Ok(out)
}

/// Result of auditing a trace file.
#[derive(Debug)]
pub struct AuditOutcome {
    pub report: CertificateReport,
    pub report_json: PathBuf,
    pub report_csv: PathBuf,
}

/// Re-evaluates all certificates on a trace written by [`cmd_run`] (or any
/// file in the same format). Expects `<base>.trace.csv` with its
/// `<base>.meta.json` sidecar; writes `<base>.audit.json` and
/// `<base>.audit.csv` next to it.
pub fn cmd_audit(trace_path: &Path) -> Result<AuditOutcome> {
    let name = trace_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("bad trace path {}", trace_path.display())))?;
    let base = name.strip_suffix(".trace.csv").ok_or_else(|| {
        Error::Config(format!(
            "expected a '<name>.trace.csv' file, got '{name}'"
        ))
    })?;
    let dir = trace_path.parent().unwrap_or_else(|| Path::new("."));
    let meta_path = dir.join(format!("{base}.meta.json"));
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| {
        Error::Config(format!(
            "cannot read sidecar {}: {e}",
            meta_path.display()
        ))
    })?;
    let meta: TraceMeta = serde_json::from_str(&meta_text)?;
    let instance = meta.instance()?;
    let csv = std::fs::read_to_string(trace_path)?;
    let trace = Trace::from_csv(&csv, &meta)?;
    let cert = SolutionCertificate::compute(&instance, REFERENCE_TOL)?;
    let report = evaluate_certificates(&instance, &trace, &cert)?;

    let report_json = dir.join(format!("{base}.audit.json"));
    let report_csv = dir.join(format!("{base}.audit.csv"));
    std::fs::write(&report_json, serde_json::to_string_pretty(&report)?)?;
    std::fs::write(&report_csv, report.to_csv())?;
    Ok(AuditOutcome {
        report,
        report_json,
        report_csv,
    })
}
