//! The two accelerated proximal methods and two baselines, all recording
//! full iterate traces.
//!
//! Each iteration of the accelerated methods computes, in displayed order:
//! the extrapolated point `y^k`, the pre-prox point `zbar^{k+1}`, the prox
//! output `z^{k+1}`, and the corrected point `x^{k+1}`. The prox
//! displacement recovers a subgradient of `g` at `z^{k+1}`:
//! `s_g^{k+1} = gamma^{-1} (zbar^{k+1} - z^{k+1})` with the iteration's prox
//! step `gamma`. No update is algebraically fused, so recorded intermediates
//! match the defining formulas term for term.

use serde::{Deserialize, Serialize};

use crate::problem::{apply_prox, CompositeInstance, InstanceDoc, ProblemClassParams};
use crate::schedule::{advance_schedule, Schedule, ScheduleState, TmmCoefficients};
use crate::{Error, Result, Vector};

/// Solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Nonstationary accelerated proximal method driven by the coefficient
    /// recursion; exact distance-contraction guarantee.
    #[serde(rename = "prox_item")]
    ProxItem,
    /// Stationary limit of the above; linear rate `1 - sqrt(q)`.
    #[serde(rename = "prox_tmm")]
    ProxTmm,
    /// Proximal gradient with step `1/L`.
    #[serde(rename = "prox_grad")]
    ProxGrad,
    /// FISTA with the constant strongly convex momentum
    /// `(1 - sqrt(q)) / (1 + sqrt(q))`.
    #[serde(rename = "fista_sc")]
    FistaSc,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ProxItem => "prox_item",
            Method::ProxTmm => "prox_tmm",
            Method::ProxGrad => "prox_grad",
            Method::FistaSc => "fista_sc",
        }
    }

    pub fn parse(name: &str) -> Result<Method> {
        match name {
            "prox_item" => Ok(Method::ProxItem),
            "prox_tmm" => Ok(Method::ProxTmm),
            "prox_grad" => Ok(Method::ProxGrad),
            "fista_sc" => Ok(Method::FistaSc),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }

    pub const ALL: [Method; 4] = [
        Method::ProxItem,
        Method::ProxTmm,
        Method::ProxGrad,
        Method::FistaSc,
    ];
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything produced by one iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    /// `x^k`
    pub x: Vector,
    /// `y^k`, the extrapolated point queried for a gradient
    pub y: Vector,
    /// `z^k`; equals `x^0` at `k = 0`
    pub z: Vector,
    /// `zbar^{k+1}`, the pre-prox point
    pub zbar_next: Vector,
    /// `grad f(y^k)`
    pub grad_f_y: Vector,
    /// Subgradient of `g` at `z^{k+1}` recovered from the prox displacement
    pub s_g_next: Vector,
    /// Extrapolation weight used this iteration
    pub beta: f64,
    /// Prox scale used this iteration; the prox step is `delta / L`
    pub delta: f64,
    /// `A_k` for the nonstationary method; absent for stationary ones
    pub a: Option<f64>,
}

/// A full run: per-iteration records plus schedule history.
#[derive(Debug, Clone)]
pub struct Trace {
    pub instance_id: String,
    pub method: Method,
    pub params: ProblemClassParams,
    pub x0: Vector,
    pub records: Vec<IterateRecord>,
    /// Scalar schedule states `0..=horizon`; empty for stationary methods.
    pub schedule_history: Vec<ScheduleState>,
}

impl Trace {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    /// `z^k` for `k <= horizon`. The final point is not stored as a record;
    /// it is reconstructed from the last record's prox displacement,
    /// `z = zbar - (delta / L) s_g`, the same way an audited trace file
    /// reconstructs it.
    pub fn z_at(&self, k: usize) -> Vector {
        assert!(k <= self.horizon(), "z index {k} out of range");
        if k < self.records.len() {
            self.records[k].z.clone()
        } else if let Some(last) = self.records.last() {
            let gamma = last.delta / self.params.lipschitz();
            last.zbar_next.add_scaled(-gamma, &last.s_g_next)
        } else {
            self.x0.clone()
        }
    }

    /// `y^k` with the convention `y^{-1} = y^0`.
    pub fn y_at(&self, k: isize) -> &Vector {
        let idx = k.max(0) as usize;
        &self.records[idx].y
    }

    /// Recovered subgradient `s_g^k` at `z^k`, `1 <= k <= horizon`, with the
    /// convention `s_g^0 = s_g^1`.
    pub fn s_g_at(&self, k: usize) -> &Vector {
        let idx = if k == 0 { 0 } else { k - 1 };
        &self.records[idx].s_g_next
    }
}

/// Output of a single iteration: the record plus the next pair of points.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub record: IterateRecord,
    pub x_next: Vector,
    pub z_next: Vector,
}

/// One iteration of the nonstationary method:
///
/// ```text
/// y^k        = (1 - beta_k) z^k + beta_k x^k
/// zbar^{k+1} = (1 - q delta_k) z^k + q delta_k y^k - (delta_k / L) grad f(y^k)
/// z^{k+1}    = prox_g^{delta_k / L}(zbar^{k+1})
/// x^{k+1}    = y^k - (1/L) grad f(y^k) - (1/delta_k)(zbar^{k+1} - z^{k+1})
/// ```
///
/// with `beta_k`, `delta_k` from [`advance_schedule`]. The prox applies to
/// the `zbar` sequence, not to the gradient-mapping point.
pub fn prox_item_step(
    instance: &CompositeInstance,
    state: &ScheduleState,
    x: &Vector,
    z: &Vector,
) -> Result<(StepResult, ScheduleState)> {
    let (c, next_state) = advance_schedule(state)?;
    let q = state.q;
    let l = instance.params().lipschitz();

    let y = Vector::lin_comb(1.0 - c.beta, z, c.beta, x);
    let grad = instance.smooth().gradient(&y);
    let zbar = Vector::lin_comb(1.0 - q * c.delta, z, q * c.delta, &y)
        .add_scaled(-c.delta / l, &grad);
    let z_next = apply_prox(instance.prox_part(), &zbar, c.delta / l)?;
    let displacement = zbar.sub(&z_next);
    let x_next = y
        .add_scaled(-1.0 / l, &grad)
        .add_scaled(-1.0 / c.delta, &displacement);
    let s_g_next = displacement.scaled(l / c.delta);

    Ok((
        StepResult {
            record: IterateRecord {
                k: state.k,
                x: x.clone(),
                y,
                z: z.clone(),
                zbar_next: zbar,
                grad_f_y: grad,
                s_g_next,
                beta: c.beta,
                delta: c.delta,
                a: Some(state.a),
            },
            x_next,
            z_next,
        },
        next_state,
    ))
}

/// One iteration of the stationary method:
///
/// ```text
/// y^k        = (2 sqrt(q) / (1 + sqrt(q))) z^k + ((1 - sqrt(q)) / (1 + sqrt(q))) x^k
/// zbar^{k+1} = (1 - sqrt(q)) z^k + sqrt(q) y^k - (1 / (sqrt(q) L)) grad f(y^k)
/// z^{k+1}    = prox_g^{1/(sqrt(q) L)}(zbar^{k+1})
/// x^{k+1}    = y^k - (1/L) grad f(y^k) - sqrt(q) (zbar^{k+1} - z^{k+1})
/// ```
pub fn prox_tmm_step(
    instance: &CompositeInstance,
    coeffs: &TmmCoefficients,
    k: usize,
    x: &Vector,
    z: &Vector,
) -> Result<StepResult> {
    let params = instance.params();
    let l = params.lipschitz();
    let r = params.q().sqrt();

    let y = Vector::lin_comb(coeffs.y_z_weight, z, coeffs.y_x_weight, x);
    let grad = instance.smooth().gradient(&y);
    let zbar = Vector::lin_comb(coeffs.zbar_z_weight, z, coeffs.zbar_y_weight, &y)
        .add_scaled(-coeffs.grad_step, &grad);
    let z_next = apply_prox(instance.prox_part(), &zbar, coeffs.prox_gamma)?;
    let displacement = zbar.sub(&z_next);
    let x_next = y
        .add_scaled(-1.0 / l, &grad)
        .add_scaled(-coeffs.correction, &displacement);
    let s_g_next = displacement.scaled(r * l);

    Ok(StepResult {
        record: IterateRecord {
            k,
            x: x.clone(),
            y,
            z: z.clone(),
            zbar_next: zbar,
            grad_f_y: grad,
            s_g_next,
            beta: coeffs.y_x_weight,
            delta: 1.0 / r,
            a: None,
        },
        x_next,
        z_next,
    })
}

/// Runs `method` from `x0` for exactly `horizon` iterations; no tolerance
/// stopping, so recorded traces depend only on the inputs.
pub fn run_method(
    instance: &CompositeInstance,
    method: Method,
    x0: &Vector,
    horizon: usize,
) -> Result<Trace> {
    if x0.dim() != instance.dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.dim(),
            got: x0.dim(),
        });
    }
    let params = instance.params();
    let l = params.lipschitz();
    let mut records = Vec::with_capacity(horizon);
    let mut schedule_history = Vec::new();

    match method {
        Method::ProxItem => {
            let mut state = ScheduleState::initial(params.q())?;
            schedule_history.push(state);
            let mut x = x0.clone();
            let mut z = x0.clone();
            for _ in 0..horizon {
                let (step, next_state) = prox_item_step(instance, &state, &x, &z)?;
                records.push(step.record);
                x = step.x_next;
                z = step.z_next;
                state = next_state;
                schedule_history.push(state);
            }
        }
        Method::ProxTmm => {
            let coeffs = TmmCoefficients::new(params);
            let mut x = x0.clone();
            let mut z = x0.clone();
            for k in 0..horizon {
                let step = prox_tmm_step(instance, &coeffs, k, &x, &z)?;
                records.push(step.record);
                x = step.x_next;
                z = step.z_next;
            }
        }
        Method::ProxGrad => {
            let mut x = x0.clone();
            for k in 0..horizon {
                let grad = instance.smooth().gradient(&x);
                let zbar = x.add_scaled(-1.0 / l, &grad);
                let z_next = apply_prox(instance.prox_part(), &zbar, 1.0 / l)?;
                let s_g_next = zbar.sub(&z_next).scaled(l);
                records.push(IterateRecord {
                    k,
                    x: x.clone(),
                    y: x.clone(),
                    z: x.clone(),
                    zbar_next: zbar,
                    grad_f_y: grad,
                    s_g_next,
                    beta: 0.0,
                    delta: 1.0,
                    a: None,
                });
                x = z_next;
            }
        }
        Method::FistaSc => {
            let momentum = {
                let r = params.q().sqrt();
                (1.0 - r) / (1.0 + r)
            };
            let mut x = x0.clone();
            let mut y = x0.clone();
            for k in 0..horizon {
                let grad = instance.smooth().gradient(&y);
                let zbar = y.add_scaled(-1.0 / l, &grad);
                let z_next = apply_prox(instance.prox_part(), &zbar, 1.0 / l)?;
                let s_g_next = zbar.sub(&z_next).scaled(l);
                records.push(IterateRecord {
                    k,
                    x: x.clone(),
                    y: y.clone(),
                    z: x.clone(),
                    zbar_next: zbar,
                    grad_f_y: grad,
                    s_g_next,
                    beta: momentum,
                    delta: 1.0,
                    a: None,
                });
                y = z_next.add_scaled(momentum, &z_next.sub(&x));
                x = z_next;
            }
        }
    }

    Ok(Trace {
        instance_id: instance.id().to_string(),
        method,
        params,
        x0: x0.clone(),
        records,
        schedule_history,
    })
}

/// JSON sidecar stored next to every trace CSV. Carries enough to rebuild
/// the instance (including an overridden curvature class) and replay the
/// certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMeta {
    pub instance: InstanceDoc,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub method: Method,
    pub horizon: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub x0: Vector,
}

impl TraceMeta {
    pub fn for_trace(trace: &Trace, instance: &CompositeInstance, seed: Option<u64>) -> Result<Self> {
        let doc = instance.to_doc().ok_or_else(|| {
            Error::InvalidInstance(format!(
                "instance {} has no serializable quadratic form",
                instance.id()
            ))
        })?;
        Ok(TraceMeta {
            instance: doc,
            mu: trace.params.mu(),
            l: trace.params.lipschitz(),
            method: trace.method,
            horizon: trace.horizon(),
            seed,
            x0: trace.x0.clone(),
        })
    }

    /// Rebuilds the instance with the recorded curvature class.
    pub fn instance(&self) -> Result<CompositeInstance> {
        let base = self.instance.clone().into_instance()?;
        let params = ProblemClassParams::new(self.mu, self.l)?;
        if base.params() == params {
            Ok(base)
        } else {
            base.with_class(params)
        }
    }
}

fn vector_headers(name: &str, dim: usize, out: &mut Vec<String>) {
    for i in 0..dim {
        out.push(format!("{name}_{i}"));
    }
}

fn push_vector(row: &mut Vec<String>, v: &Vector) {
    for &e in v.iter() {
        row.push(format!("{e}"));
    }
}

impl Trace {
    /// One CSV row per iteration. Column order is fixed: `k`, then the six
    /// point/gradient fields flattened with coordinate suffixes, then
    /// `beta_k`, `delta_k`, `A_k` (blank for stationary methods). Numbers use
    /// shortest round-trip formatting, so re-parsing is exact.
    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let mut headers = vec!["k".to_string()];
        for name in ["x_k", "y_k", "z_k", "zbar_next", "grad_f_y", "s_g_next"] {
            vector_headers(name, dim, &mut headers);
        }
        headers.push("beta_k".into());
        headers.push("delta_k".into());
        headers.push("A_k".into());

        let mut out = headers.join(",");
        out.push('\n');
        for rec in &self.records {
            let mut row = vec![format!("{}", rec.k)];
            for v in [
                &rec.x,
                &rec.y,
                &rec.z,
                &rec.zbar_next,
                &rec.grad_f_y,
                &rec.s_g_next,
            ] {
                push_vector(&mut row, v);
            }
            row.push(format!("{}", rec.beta));
            row.push(format!("{}", rec.delta));
            row.push(rec.a.map(|a| format!("{a}")).unwrap_or_default());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses a trace CSV against its sidecar. The schedule history of the
    /// nonstationary method is regenerated from `q` and cross-checked against
    /// the recorded `A_k` column.
    pub fn from_csv(csv: &str, meta: &TraceMeta) -> Result<Trace> {
        let dim = meta.instance.dim;
        let params = ProblemClassParams::new(meta.mu, meta.l)?;
        let mut lines = csv.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedTrace("empty file".into()))?;
        let expected_cols = 1 + 6 * dim + 3;
        if header.split(',').count() != expected_cols {
            return Err(Error::MalformedTrace(format!(
                "expected {expected_cols} columns for dim {dim}, found {}",
                header.split(',').count()
            )));
        }

        let mut records = Vec::new();
        for (line_no, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != expected_cols {
                return Err(Error::MalformedTrace(format!(
                    "row {line_no}: expected {expected_cols} cells, found {}",
                    cells.len()
                )));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::MalformedTrace(format!("row {line_no}: bad {what} value '{s}'"))
                })
            };
            let k: usize = cells[0]
                .parse()
                .map_err(|_| Error::MalformedTrace(format!("row {line_no}: bad k '{}'", cells[0])))?;
            let mut pos = 1;
            let take_vector = |pos: &mut usize, what: &str| -> Result<Vector> {
                let mut entries = Vec::with_capacity(dim);
                for i in 0..dim {
                    entries.push(parse(cells[*pos + i], what)?);
                }
                *pos += dim;
                Vector::new(entries)
            };
            let x = take_vector(&mut pos, "x_k")?;
            let y = take_vector(&mut pos, "y_k")?;
            let z = take_vector(&mut pos, "z_k")?;
            let zbar_next = take_vector(&mut pos, "zbar_next")?;
            let grad_f_y = take_vector(&mut pos, "grad_f_y")?;
            let s_g_next = take_vector(&mut pos, "s_g_next")?;
            let beta = parse(cells[pos], "beta_k")?;
            let delta = parse(cells[pos + 1], "delta_k")?;
            let a = if cells[pos + 2].is_empty() {
                None
            } else {
                Some(parse(cells[pos + 2], "A_k")?)
            };
            records.push(IterateRecord {
                k,
                x,
                y,
                z,
                zbar_next,
                grad_f_y,
                s_g_next,
                beta,
                delta,
                a,
            });
        }

        if records.len() != meta.horizon {
            return Err(Error::MalformedTrace(format!(
                "sidecar declares horizon {}, file has {} rows",
                meta.horizon,
                records.len()
            )));
        }

        // the recorded subgradient must match the prox displacement:
        // s_g^{k+1} = (L / delta_k)(zbar^{k+1} - z^{k+1})
        let l = params.lipschitz();
        for k in 0..records.len().saturating_sub(1) {
            let rec = &records[k];
            let z_next = &records[k + 1].z;
            let expected = rec.zbar_next.sub(z_next).scaled(l / rec.delta);
            let err = expected.distance(&rec.s_g_next);
            if err > 1e-9 * expected.norm().max(1.0) {
                return Err(Error::MalformedTrace(format!(
                    "row {k}: s_g_next does not match the prox displacement (off by {err:e})"
                )));
            }
        }

        let schedule_history = if meta.method == Method::ProxItem {
            let schedule = Schedule::generate(params.q(), records.len())?;
            for (k, rec) in records.iter().enumerate() {
                let expected = schedule.state(k).a;
                let recorded = rec.a.ok_or_else(|| {
                    Error::MalformedTrace(format!("row {k}: missing A_k on a prox_item trace"))
                })?;
                if (recorded - expected).abs() > 1e-12 * expected.max(1.0) {
                    return Err(Error::MalformedTrace(format!(
                        "row {k}: recorded A_k = {recorded} does not match the recursion ({expected})"
                    )));
                }
                let delta = schedule.coefficients(k).delta;
                if (rec.delta - delta).abs() > 1e-12 * delta {
                    return Err(Error::MalformedTrace(format!(
                        "row {k}: recorded delta_k = {} does not match the recursion ({delta})",
                        rec.delta
                    )));
                }
            }
            schedule.states().to_vec()
        } else {
            Vec::new()
        };

        Ok(Trace {
            instance_id: meta.instance.id.clone(),
            method: meta.method,
            params,
            x0: meta.x0.clone(),
            records,
            schedule_history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{
        make_quadratic_instance, make_quadratic_instance_with_class, GSpec,
    };

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::new(vec![a, b]).unwrap()
    }

    fn params14() -> ProblemClassParams {
        ProblemClassParams::new(1.0, 4.0).unwrap()
    }

    /// `f = L/2 ||.||^2` (scalar), declared in the class `[1, 4]` so `q = 1/4`.
    fn tight_l_scalar() -> CompositeInstance {
        make_quadratic_instance_with_class(
            "tight-L",
            Vector::new(vec![4.0]).unwrap(),
            Vector::new(vec![0.0]).unwrap(),
            GSpec::Zero,
            params14(),
        )
        .unwrap()
    }

    fn tight_mu_scalar() -> CompositeInstance {
        make_quadratic_instance_with_class(
            "tight-mu",
            Vector::new(vec![1.0]).unwrap(),
            Vector::new(vec![0.0]).unwrap(),
            GSpec::Zero,
            params14(),
        )
        .unwrap()
    }

    fn box_qp() -> CompositeInstance {
        make_quadratic_instance(
            "box-qp",
            vec2(1.0, 4.0),
            vec2(2.0, 8.0),
            GSpec::Box {
                lo: vec2(0.0, 0.0),
                hi: vec2(1.0, 1.0),
            },
        )
        .unwrap()
    }

    #[test]
    fn first_step_on_extreme_quadratics() {
        // z^1 = -(1 + q A_1)^{-1/2} x^0 = -0.6 on f = L/2 ||.||^2
        let one = Vector::new(vec![1.0]).unwrap();
        let state = ScheduleState::initial(0.25).unwrap();
        let (step, _) = prox_item_step(&tight_l_scalar(), &state, &one, &one).unwrap();
        assert!((step.z_next[0] + 0.6).abs() <= 1e-12, "z^1 = {}", step.z_next[0]);

        // +0.6 on f = mu/2 ||.||^2
        let (step, _) = prox_item_step(&tight_mu_scalar(), &state, &one, &one).unwrap();
        assert!((step.z_next[0] - 0.6).abs() <= 1e-12, "z^1 = {}", step.z_next[0]);
    }

    #[test]
    fn inactive_prox_reduces_to_gradient_step() {
        // minimizer strictly inside the box, start close to it: the prox is
        // inactive, the recovered subgradient is exactly zero, and the
        // x-update degenerates to a pure gradient step
        let inst = make_quadratic_instance(
            "interior-box",
            vec2(1.0, 4.0),
            vec2(0.5, 2.0),
            GSpec::Box {
                lo: vec2(0.0, 0.0),
                hi: vec2(1.0, 1.0),
            },
        )
        .unwrap();
        let x0 = vec2(0.4, 0.6);
        let state = ScheduleState::initial(0.25).unwrap();
        let (step, _) = prox_item_step(&inst, &state, &x0, &x0).unwrap();
        assert_eq!(step.record.zbar_next, step.z_next);
        assert_eq!(step.record.s_g_next, Vector::zeros(2));
        let l = inst.params().lipschitz();
        let pure = step.record.y.add_scaled(-1.0 / l, &step.record.grad_f_y);
        assert_eq!(step.x_next, pure);
    }

    #[test]
    fn tight_instance_norm_ratio_over_horizon() {
        // ||z^k|| / ||x^0|| = (1 + q A_k)^{-1/2} with alternating sign on the
        // L-extreme quadratic, constant sign on the mu-extreme one
        for (inst, alternating) in [(tight_l_scalar(), true), (tight_mu_scalar(), false)] {
            let x0 = Vector::new(vec![1.0]).unwrap();
            let trace = run_method(&inst, Method::ProxItem, &x0, 50).unwrap();
            let q = inst.params().q();
            for k in 0..=50 {
                let a = trace.schedule_history[k].a;
                let z = trace.z_at(k);
                let expected = (1.0 + q * a).powf(-0.5);
                let rel = (z.norm() - expected).abs() / expected;
                assert!(rel <= 1e-10, "norm ratio off at k={k}: {rel}");
                if alternating {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    assert!(z[0] * sign > 0.0, "sign at k={k} is {}", z[0]);
                } else {
                    assert!(z[0] > 0.0);
                }
            }
        }
    }

    #[test]
    fn tmm_weights_and_fixed_point() {
        let inst = box_qp();
        let coeffs = TmmCoefficients::new(inst.params());
        // at q = 1/4: y-weights (2/3, 1/3), zbar-weights (1/2, 1/2),
        // gradient step 2/L, prox step 2/L, correction 1/2
        assert!((coeffs.y_z_weight - 2.0 / 3.0).abs() <= 1e-15);
        assert!((coeffs.y_x_weight - 1.0 / 3.0).abs() <= 1e-15);
        assert_eq!(coeffs.grad_step, 0.5);
        assert_eq!(coeffs.prox_gamma, 0.5);
        assert_eq!(coeffs.correction, 0.5);

        // starting at the minimizer (a prox-gradient fixed point), the main
        // sequence stays exactly there and x drifts at most by rounding
        let star = vec2(1.0, 1.0);
        let trace = run_method(&inst, Method::ProxTmm, &star, 10).unwrap();
        for k in 0..=10 {
            assert_eq!(trace.z_at(k), star, "z moved at k={k}");
        }
        for rec in &trace.records {
            assert!(rec.x.distance(&star) <= 1e-12);
        }
    }

    #[test]
    fn tmm_contracts_exactly_on_mu_mode() {
        // on f = mu/2 ||.||^2 with g = 0 the pre-prox update collapses to
        // z^{k+1} = (1 - sqrt(q)) z^k; this pins the stationary method's
        // linear rate without any certificate machinery
        let inst = tight_mu_scalar();
        let x0 = Vector::new(vec![1.0]).unwrap();
        let trace = run_method(&inst, Method::ProxTmm, &x0, 30).unwrap();
        let rate = 1.0 - inst.params().q().sqrt();
        for k in 0..30 {
            let z = trace.z_at(k);
            let z_next = trace.z_at(k + 1);
            let rel = (z_next[0] - rate * z[0]).abs() / z[0].abs().max(1e-300);
            assert!(rel <= 1e-12, "rate off at k={k}: {rel}");
        }
    }

    #[test]
    fn zero_g_makes_prox_transparent() {
        for method in [Method::ProxItem, Method::ProxTmm] {
            let inst = tight_l_scalar();
            let x0 = Vector::new(vec![0.7]).unwrap();
            let trace = run_method(&inst, method, &x0, 20).unwrap();
            for rec in &trace.records {
                // zbar^{k+1} - z^{k+1} = 0 exactly, so the correction vanishes
                assert_eq!(rec.s_g_next, Vector::zeros(1), "method {method}");
            }
        }
    }

    #[test]
    fn prox_grad_converges_on_box() {
        let inst = box_qp();
        let trace = run_method(&inst, Method::ProxGrad, &vec2(0.0, 0.0), 400).unwrap();
        let z = trace.z_at(400);
        assert!(z.distance(&vec2(1.0, 1.0)) <= 1e-10, "z = {z:?}");
    }

    #[test]
    fn zero_horizon_trace_is_initialization_only() {
        let inst = box_qp();
        let trace = run_method(&inst, Method::FistaSc, &vec2(0.2, 0.4), 0).unwrap();
        assert!(trace.records.is_empty());
        assert_eq!(trace.x0, vec2(0.2, 0.4));
    }

    #[test]
    fn item_coefficients_approach_tmm_map() {
        let inst = box_qp();
        let trace = run_method(&inst, Method::ProxItem, &vec2(0.0, 0.0), 100).unwrap();
        let coeffs = TmmCoefficients::new(inst.params());
        let last = trace.records.last().unwrap();
        assert!((last.beta - coeffs.y_x_weight).abs() <= 1e-9);
        assert!((last.delta - 1.0 / inst.params().q().sqrt()).abs() <= 1e-9);
        // convergence is monotone along the tail
        let mut prev = f64::INFINITY;
        for rec in trace.records.iter().skip(5) {
            let err = (rec.beta - coeffs.y_x_weight).abs();
            assert!(err <= prev + 1e-15);
            prev = err;
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let inst = box_qp();
        let x0 = vec2(-0.3, 1.7);
        for method in Method::ALL {
            let trace = run_method(&inst, method, &x0, 7).unwrap();
            let meta = TraceMeta::for_trace(&trace, &inst, Some(42)).unwrap();
            let csv = trace.to_csv();
            let parsed = Trace::from_csv(&csv, &meta).unwrap();
            assert_eq!(parsed.records, trace.records, "{method}");
            assert_eq!(parsed.to_csv(), csv, "{method}");
            // final-point reconstruction agrees between the two paths
            assert_eq!(parsed.z_at(7), trace.z_at(7));
        }
    }

    #[test]
    fn csv_rejects_inconsistent_rows() {
        let inst = box_qp();
        let trace = run_method(&inst, Method::ProxItem, &vec2(0.0, 0.0), 3).unwrap();
        let meta = TraceMeta::for_trace(&trace, &inst, None).unwrap();
        let csv = trace.to_csv();

        // truncated file
        let mut lines: Vec<&str> = csv.lines().collect();
        lines.pop();
        assert!(Trace::from_csv(&lines.join("\n"), &meta).is_err());

        // corrupted A_k column
        let bad = csv.replace(
            &format!("{}", trace.records[1].a.unwrap()),
            "3.5",
        );
        assert!(Trace::from_csv(&bad, &meta).is_err());

        // corrupted delta column
        let bad = csv.replace(&format!("{}", trace.records[1].delta), "1.23");
        assert!(Trace::from_csv(&bad, &meta).is_err());

        // a recorded subgradient inconsistent with the prox displacement
        let mut rows: Vec<String> = csv.lines().map(String::from).collect();
        let target = format!("{}", trace.records[0].s_g_next[0]);
        rows[1] = rows[1].replacen(&target, "0.77", 1);
        assert!(matches!(
            Trace::from_csv(&rows.join("\n"), &meta),
            Err(Error::MalformedTrace(_))
        ));
    }

    #[test]
    fn run_method_rejects_dimension_mismatch() {
        let inst = box_qp();
        let bad = Vector::new(vec![1.0]).unwrap();
        assert!(run_method(&inst, Method::ProxItem, &bad, 3).is_err());
    }

    #[test]
    fn tmm_rate_eventually_reached_on_some_window() {
        // somewhere before the floating-point floor, a 20-iteration window
        // contracts at the asymptotic rate itself, not just at the slack-
        // padded acceptance bound
        for id in ["lasso-sc", "halfspace"] {
            let inst = crate::bench::builtin_instance(id, None).unwrap();
            let cert =
                crate::certificates::SolutionCertificate::compute(&inst, 1e-12).unwrap();
            let x0 = crate::bench::seeded_start(inst.dim(), 1);
            let trace = run_method(&inst, Method::ProxTmm, &x0, 100).unwrap();
            let dists: Vec<f64> = (0..=100)
                .map(|k| trace.z_at(k).distance(&cert.x_star))
                .collect();
            let floor = 1e-12
                * 1.0f64
                    .max(cert.x_star.norm())
                    .max(x0.distance(&cert.x_star));
            let threshold = 1.0 - inst.params().q().sqrt() + 1e-6;
            let found = (5..dists.len() - 20).any(|a| {
                let b = a + 20;
                dists[b] > floor && (dists[b] / dists[a]).powf(1.0 / 20.0) <= threshold
            });
            assert!(found, "{id}: no 20-step window at rate {threshold}");
        }
    }

    #[test]
    fn concurrent_runs_match_sequential() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<CompositeInstance>();
        assert_send_sync::<Trace>();

        let inst = std::sync::Arc::new(box_qp());
        let sequential: Vec<Trace> = Method::ALL
            .iter()
            .map(|&m| run_method(&inst, m, &vec2(0.3, -0.8), 12).unwrap())
            .collect();
        let handles: Vec<_> = Method::ALL
            .iter()
            .map(|&m| {
                let inst = inst.clone();
                std::thread::spawn(move || run_method(&inst, m, &vec2(0.3, -0.8), 12).unwrap())
            })
            .collect();
        for (handle, expected) in handles.into_iter().zip(sequential) {
            let trace = handle.join().unwrap();
            assert_eq!(trace.records, expected.records);
        }
    }
}
