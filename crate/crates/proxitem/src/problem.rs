//! Problem definitions: the smooth/prox oracle pair, concrete instance
//! families, and a high-accuracy reference solution.
//!
//! A problem is `minimize f(x) + g(x)` where `f` is mu-strongly convex and
//! L-smooth with `0 < mu < L`, and `g` is convex, proper, and lower
//! semicontinuous. `f` is accessed through value/gradient calls and `g`
//! through its proximal operator `prox_g^gamma(x) = argmin_z g(z) +
//! ||x - z||^2 / (2 gamma)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vector};

/// Points within this componentwise distance of a constraint set are treated
/// as feasible when evaluating indicator functions; prox outputs are feasible
/// only up to rounding.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Iteration budget of the proximal-gradient reference solver.
pub const REFERENCE_BUDGET: u64 = 10_000_000;

/// Curvature bounds of the smooth part. `q = mu / L` is the inverse
/// condition number and always computed, never stored.
///
/// Construction rejects `q > 1 - 1e-6`: the coefficient recursion is not
/// numerically meaningful that close to `mu = L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemClassParams {
    mu: f64,
    l: f64,
}

impl ProblemClassParams {
    pub fn new(mu: f64, l: f64) -> Result<Self> {
        if !(mu.is_finite() && l.is_finite()) || mu <= 0.0 || l <= mu {
            return Err(Error::InvalidParams(format!(
                "need 0 < mu < L < inf, got mu={mu}, L={l}"
            )));
        }
        if mu / l > 1.0 - 1e-6 {
            return Err(Error::InvalidParams(format!(
                "q = mu/L = {} too close to 1 (limit 1 - 1e-6)",
                mu / l
            )));
        }
        Ok(ProblemClassParams { mu, l })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lipschitz(&self) -> f64 {
        self.l
    }

    /// Inverse condition number `mu / L`, always in `(0, 1)`.
    pub fn q(&self) -> f64 {
        self.mu / self.l
    }
}

/// Value/gradient oracle for the smooth part.
///
/// Implementations must be mu-strongly convex and L-smooth for the declared
/// [`ProblemClassParams`]; this is testable on any point set through the
/// pairwise interpolation inequalities evaluated by
/// [`crate::certificates::interpolation_audit_f`].
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn params(&self) -> ProblemClassParams;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
}

/// Proximal oracle for the nonsmooth part. `value` may return `+inf`
/// outside the effective domain; `prox` must satisfy the subgradient
/// characterization `(x - p) / gamma ∈ ∂g(p)` for `p = prox(x, gamma)`.
pub trait ProxOracle: Send + Sync {
    fn value(&self, x: &Vector) -> f64;
    fn prox(&self, x: &Vector, gamma: f64) -> Vector;
}

/// Evaluates the smooth oracle at one point, returning value and gradient
/// together (one logical query).
pub fn eval_smooth(f: &dyn SmoothOracle, x: &Vector) -> Result<(f64, Vector)> {
    if x.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.dim(),
        });
    }
    Ok((f.value(x), f.gradient(x)))
}

/// Applies the proximal operator with step `gamma > 0`.
pub fn apply_prox(g: &dyn ProxOracle, x: &Vector, gamma: f64) -> Result<Vector> {
    let valid = gamma.is_finite() && gamma > 0.0;
    if !valid {
        return Err(Error::NonPositiveStep(gamma));
    }
    Ok(g.prox(x, gamma))
}

/// Diagonal quadratic `f(x) = 1/2 sum_i diag_i x_i^2 - <b, x>` with a
/// declared curvature class. The diagonal must lie inside `[mu, L]`; it
/// need not attain either endpoint, so extreme quadratics like
/// `f = L/2 ||.||^2` can be declared as members of a wider class.
#[derive(Debug, Clone)]
pub struct DiagQuadratic {
    diag: Vector,
    b: Vector,
    params: ProblemClassParams,
}

impl DiagQuadratic {
    /// Class parameters taken from the diagonal itself: `mu = min(diag)`,
    /// `L = max(diag)`. Rejects nonpositive entries and a constant diagonal
    /// (which would force `mu = L`).
    pub fn new(diag: Vector, b: Vector) -> Result<Self> {
        let (lo, hi) = diag_range(&diag)?;
        if lo == hi {
            return Err(Error::InvalidInstance(
                "all diagonal entries equal: mu < L fails".into(),
            ));
        }
        let params = ProblemClassParams::new(lo, hi)?;
        Self::with_params(diag, b, params)
    }

    /// Declares an explicit class `[mu, L]`; the diagonal must fit inside it.
    pub fn with_params(diag: Vector, b: Vector, params: ProblemClassParams) -> Result<Self> {
        if diag.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: diag.dim(),
                got: b.dim(),
            });
        }
        let (lo, hi) = diag_range(&diag)?;
        if lo < params.mu() || hi > params.lipschitz() {
            return Err(Error::InvalidInstance(format!(
                "diagonal range [{lo}, {hi}] outside declared class [{}, {}]",
                params.mu(),
                params.lipschitz()
            )));
        }
        Ok(DiagQuadratic { diag, b, params })
    }

    pub fn diag(&self) -> &Vector {
        &self.diag
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }
}

fn diag_range(diag: &Vector) -> Result<(f64, f64)> {
    if diag.dim() == 0 {
        return Err(Error::InvalidInstance("empty diagonal".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &d in diag.iter() {
        if d <= 0.0 {
            return Err(Error::InvalidInstance(format!(
                "nonpositive diagonal entry {d}"
            )));
        }
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok((lo, hi))
}

impl SmoothOracle for DiagQuadratic {
    fn dim(&self) -> usize {
        self.diag.dim()
    }

    fn params(&self) -> ProblemClassParams {
        self.params
    }

    fn value(&self, x: &Vector) -> f64 {
        let mut acc = 0.0;
        for i in 0..x.dim() {
            acc += 0.5 * self.diag[i] * x[i] * x[i] - self.b[i] * x[i];
        }
        acc
    }

    fn gradient(&self, x: &Vector) -> Vector {
        Vector::new(
            (0..x.dim())
                .map(|i| self.diag[i] * x[i] - self.b[i])
                .collect(),
        )
        .expect("finite gradient")
    }
}

/// Built-in nonsmooth terms with closed-form proximal operators.
///
/// Serialized as `{"kind": ..., "params": ...}` inside instance documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum GSpec {
    /// `g = 0`; prox is the identity.
    #[serde(rename = "zero")]
    Zero,
    /// `g(x) = lambda ||x||_1`; prox is componentwise soft-thresholding.
    #[serde(rename = "l1")]
    L1 { lambda: f64 },
    /// Indicator of the box `[lo, hi]` (componentwise); prox is clipping and
    /// does not depend on the step.
    #[serde(rename = "box")]
    Box { lo: Vector, hi: Vector },
    /// Indicator of the nonnegative orthant.
    #[serde(rename = "nonneg")]
    NonNeg,
    /// `g(x) = lambda/2 ||x||^2`; prox scales by `1 / (1 + gamma lambda)`.
    #[serde(rename = "sq_l2")]
    SqL2 { lambda: f64 },
}

impl GSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            GSpec::Zero | GSpec::NonNeg => Ok(()),
            GSpec::L1 { lambda } | GSpec::SqL2 { lambda } => {
                if *lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInstance(format!(
                        "regularization weight must be finite and >= 0, got {lambda}"
                    )))
                }
            }
            GSpec::Box { lo, hi } => {
                if lo.dim() != dim || hi.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: lo.dim().max(hi.dim()),
                    });
                }
                for i in 0..dim {
                    if lo[i] > hi[i] {
                        return Err(Error::InvalidInstance(format!(
                            "box bounds crossed at coordinate {i}: {} > {}",
                            lo[i], hi[i]
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

impl ProxOracle for GSpec {
    fn value(&self, x: &Vector) -> f64 {
        match self {
            GSpec::Zero => 0.0,
            GSpec::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            GSpec::Box { lo, hi } => {
                for i in 0..x.dim() {
                    if x[i] < lo[i] - FEASIBILITY_TOL || x[i] > hi[i] + FEASIBILITY_TOL {
                        return f64::INFINITY;
                    }
                }
                0.0
            }
            GSpec::NonNeg => {
                if x.iter().all(|&v| v >= -FEASIBILITY_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            GSpec::SqL2 { lambda } => 0.5 * lambda * x.norm_sq(),
        }
    }

    fn prox(&self, x: &Vector, gamma: f64) -> Vector {
        let out: Vec<f64> = match self {
            GSpec::Zero => return x.clone(),
            GSpec::L1 { lambda } => x.iter().map(|&v| soft_threshold(v, gamma * lambda)).collect(),
            GSpec::Box { lo, hi } => (0..x.dim()).map(|i| x[i].clamp(lo[i], hi[i])).collect(),
            GSpec::NonNeg => x.iter().map(|&v| v.max(0.0)).collect(),
            GSpec::SqL2 { lambda } => {
                let s = 1.0 / (1.0 + gamma * lambda);
                x.iter().map(|&v| s * v).collect()
            }
        };
        Vector::new(out).expect("finite prox output")
    }
}

/// A concrete composite problem: oracle pair, dimension, and an optional
/// certified minimizer.
#[derive(Clone)]
pub struct CompositeInstance {
    id: String,
    dim: usize,
    f: Arc<dyn SmoothOracle>,
    g: Arc<dyn ProxOracle>,
    known_solution: Option<Vector>,
    known_solution_tolerance: f64,
    quad: Option<QuadForm>,
}

#[derive(Debug, Clone)]
struct QuadForm {
    diag: Vector,
    b: Vector,
    g: GSpec,
}

impl CompositeInstance {
    /// Wraps user-supplied oracles. No known solution is attached.
    pub fn from_oracles(
        id: impl Into<String>,
        f: Arc<dyn SmoothOracle>,
        g: Arc<dyn ProxOracle>,
    ) -> Self {
        let dim = f.dim();
        CompositeInstance {
            id: id.into(),
            dim,
            f,
            g,
            known_solution: None,
            known_solution_tolerance: 0.0,
            quad: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smooth(&self) -> &dyn SmoothOracle {
        self.f.as_ref()
    }

    pub fn prox_part(&self) -> &dyn ProxOracle {
        self.g.as_ref()
    }

    pub fn params(&self) -> ProblemClassParams {
        self.f.params()
    }

    pub fn known_solution(&self) -> Option<&Vector> {
        self.known_solution.as_ref()
    }

    pub fn known_solution_tolerance(&self) -> f64 {
        self.known_solution_tolerance
    }

    /// Serializable form, present when the instance is a diagonal quadratic
    /// with a built-in nonsmooth term.
    pub fn to_doc(&self) -> Option<InstanceDoc> {
        self.quad.as_ref().map(|quad| InstanceDoc {
            id: self.id.clone(),
            dim: self.dim,
            diag: quad.diag.clone(),
            b: quad.b.clone(),
            g: quad.g.clone(),
            known_solution: self.known_solution.clone(),
        })
    }

    /// Declared class parameters, overridden. Usable only when it widens the
    /// class (the oracle stays a member); the quadratic form is revalidated.
    pub fn with_class(&self, params: ProblemClassParams) -> Result<CompositeInstance> {
        let quad = self.quad.as_ref().ok_or_else(|| {
            Error::InvalidInstance(format!(
                "instance {} has no quadratic form; cannot override its class",
                self.id
            ))
        })?;
        let f = DiagQuadratic::with_params(quad.diag.clone(), quad.b.clone(), params)?;
        Ok(CompositeInstance {
            id: self.id.clone(),
            dim: self.dim,
            f: Arc::new(f),
            g: self.g.clone(),
            known_solution: self.known_solution.clone(),
            known_solution_tolerance: self.known_solution_tolerance,
            quad: self.quad.clone(),
        })
    }
}

/// On-disk instance document. Field names are fixed so traces stay
/// comparable across implementations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub id: String,
    pub dim: usize,
    pub diag: Vector,
    pub b: Vector,
    pub g: GSpec,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub known_solution: Option<Vector>,
}

impl InstanceDoc {
    /// Rebuilds the instance. A stored `known_solution` is revalidated
    /// against the fixed-point residual; the analytic solution is recomputed
    /// either way, so the stored field is advisory.
    pub fn into_instance(self) -> Result<CompositeInstance> {
        if self.diag.dim() != self.dim || self.b.dim() != self.dim {
            return Err(Error::InvalidInstance(format!(
                "declared dim {} does not match diag/b lengths {}/{}",
                self.dim,
                self.diag.dim(),
                self.b.dim()
            )));
        }
        make_quadratic_instance(&self.id, self.diag, self.b, self.g)
    }
}

/// Builds a diagonal-quadratic composite instance. The smooth part is
/// `f(x) = 1/2 sum_i diag_i x_i^2 - <b, x>` with class `mu = min(diag)`,
/// `L = max(diag)`; the nonsmooth part is given by `g`. All built-in
/// nonsmooth terms are separable, so the minimizer is computed in closed
/// form from per-coordinate stationarity and attached as `known_solution`.
pub fn make_quadratic_instance(
    id: &str,
    diag: Vector,
    b: Vector,
    g: GSpec,
) -> Result<CompositeInstance> {
    g.validate(diag.dim())?;
    let f = DiagQuadratic::new(diag.clone(), b.clone())?;
    quadratic_instance_inner(id, f, diag, b, g)
}

/// Same as [`make_quadratic_instance`] but with an explicitly declared
/// (wider) curvature class, so quadratics with a constant diagonal can be
/// posed as members of `[mu, L]`.
pub fn make_quadratic_instance_with_class(
    id: &str,
    diag: Vector,
    b: Vector,
    g: GSpec,
    params: ProblemClassParams,
) -> Result<CompositeInstance> {
    g.validate(diag.dim())?;
    let f = DiagQuadratic::with_params(diag.clone(), b.clone(), params)?;
    quadratic_instance_inner(id, f, diag, b, g)
}

fn quadratic_instance_inner(
    id: &str,
    f: DiagQuadratic,
    diag: Vector,
    b: Vector,
    g: GSpec,
) -> Result<CompositeInstance> {
    let solution = separable_minimizer(&diag, &b, &g);
    let g = Arc::new(g);
    let mut instance = CompositeInstance {
        id: id.to_string(),
        dim: diag.dim(),
        f: Arc::new(f),
        g: g.clone(),
        known_solution: None,
        known_solution_tolerance: 0.0,
        quad: Some(QuadForm {
            diag,
            b,
            g: (*g).clone(),
        }),
    };
    if let Some(solution) = solution {
        let residual = fixed_point_residual(&instance, &solution);
        let scale = 1.0 + solution.norm();
        if residual > 1e-10 * scale {
            return Err(Error::InvalidInstance(format!(
                "closed-form minimizer of {id} fails its residual check: {residual:e}"
            )));
        }
        instance.known_solution = Some(solution);
        // Rounding of the closed form leaves a few-ulp residual; declare a
        // tolerance just above it.
        instance.known_solution_tolerance = (4.0 * residual).max(1e-15);
    }
    Ok(instance)
}

/// Per-coordinate stationarity `diag_i x_i - b_i + ∂g_i(x_i) ∋ 0` for the
/// separable built-in nonsmooth terms.
fn separable_minimizer(diag: &Vector, b: &Vector, g: &GSpec) -> Option<Vector> {
    let dim = diag.dim();
    let entries: Vec<f64> = match g {
        GSpec::Zero => (0..dim).map(|i| b[i] / diag[i]).collect(),
        GSpec::L1 { lambda } => (0..dim)
            .map(|i| soft_threshold(b[i], *lambda) / diag[i])
            .collect(),
        GSpec::Box { lo, hi } => (0..dim)
            .map(|i| (b[i] / diag[i]).clamp(lo[i], hi[i]))
            .collect(),
        GSpec::NonNeg => (0..dim).map(|i| (b[i] / diag[i]).max(0.0)).collect(),
        GSpec::SqL2 { lambda } => (0..dim).map(|i| b[i] / (diag[i] + lambda)).collect(),
    };
    Some(Vector::new(entries).expect("finite minimizer"))
}

/// Composite fixed-point residual `||x - prox_g^{1/L}(x - (1/L) grad f(x))||`.
/// Zero exactly at the minimizer.
pub fn fixed_point_residual(instance: &CompositeInstance, x: &Vector) -> f64 {
    let l = instance.params().lipschitz();
    let grad = instance.smooth().gradient(x);
    let forward = x.add_scaled(-1.0 / l, &grad);
    let p = instance.prox_part().prox(&forward, 1.0 / l);
    x.distance(&p)
}

/// Returns a point whose fixed-point residual is at most `tol`.
///
/// When the instance carries a `known_solution` whose declared tolerance is
/// at least as tight as `tol`, that solution is returned directly; otherwise
/// proximal-gradient iteration with step `1/L` runs until the residual
/// criterion holds, within a budget of [`REFERENCE_BUDGET`] iterations.
pub fn solve_reference(instance: &CompositeInstance, tol: f64) -> Result<Vector> {
    check_tol(tol)?;
    if let Some(known) = instance.known_solution() {
        if instance.known_solution_tolerance() <= tol {
            return Ok(known.clone());
        }
    }
    solve_reference_iterative(instance, tol)
}

fn check_tol(tol: f64) -> Result<()> {
    let valid = tol.is_finite() && tol > 0.0;
    if !valid {
        return Err(Error::InvalidParams(format!(
            "reference tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// The iterative path of [`solve_reference`], ignoring any known solution.
pub fn solve_reference_iterative(instance: &CompositeInstance, tol: f64) -> Result<Vector> {
    check_tol(tol)?;
    let l = instance.params().lipschitz();
    let mut x = Vector::zeros(instance.dim());
    let mut best = f64::INFINITY;
    for _ in 0..REFERENCE_BUDGET {
        let grad = instance.smooth().gradient(&x);
        let next = instance
            .prox_part()
            .prox(&x.add_scaled(-1.0 / l, &grad), 1.0 / l);
        let residual = x.distance(&next);
        best = best.min(residual);
        if residual <= tol {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::ReferenceBudgetExhausted {
        tol,
        budget: REFERENCE_BUDGET,
        best_residual: best,
    })
}
