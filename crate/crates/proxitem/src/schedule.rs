//! The scalar coefficient sequences driving the accelerated method: the
//! growth recursion for `A_k`, the derived extrapolation and prox-step
//! coefficients `beta_k`, `delta_k`, the coupling scalar
//! `sigma_k = sqrt((1 + A_k)(1 + q A_k))`, their sign facts, and their
//! stationary limits.
//!
//! `sigma_k` is always recomputed from `A_k` rather than propagated, which
//! keeps the four polynomial identities checked by
//! [`Schedule::identity_residuals`] exact up to one rounding.

use serde::{Deserialize, Serialize};

use crate::problem::ProblemClassParams;
use crate::{Error, Result};

/// The recursion refuses to advance past this value of `A_k`; the growth is
/// geometric at rate `(1 - sqrt(q))^{-2}`, so long horizons report rates via
/// accumulated `A_k / A_{k+1}` ratios instead.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Scalar state of the recursion at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub k: usize,
    pub q: f64,
    /// `A_k`; zero at `k = 0`, strictly positive afterwards.
    pub a: f64,
    /// `sigma_k = sqrt((1 + A_k)(1 + q A_k))`, recomputed from `a`.
    pub sigma: f64,
}

impl ScheduleState {
    /// State at `k = 0`: `A_0 = 0`, `sigma_0 = 1`.
    pub fn initial(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(ScheduleState {
            k: 0,
            q,
            a: 0.0,
            sigma: 1.0,
        })
    }

    fn from_a(k: usize, q: f64, a: f64) -> Self {
        ScheduleState {
            k,
            q,
            a,
            sigma: sigma_from_a(q, a),
        }
    }
}

/// `sqrt((1 + a)(1 + q a))`, rescaled for large `a` where the plain product
/// would leave the representable range before `a` reaches [`OVERFLOW_LIMIT`].
fn sigma_from_a(q: f64, a: f64) -> f64 {
    if a <= 1e150 {
        ((1.0 + a) * (1.0 + q * a)).sqrt()
    } else {
        let inv = 1.0 / a;
        a * ((inv + 1.0) * (inv + q)).sqrt()
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParams(format!("q must lie in (0, 1), got {q}")));
    }
    if q > 1.0 - 1e-6 {
        return Err(Error::InvalidParams(format!(
            "q = {q} too close to 1 (limit 1 - 1e-6); the recursion is not numerically meaningful there"
        )));
    }
    Ok(())
}

/// Coefficients used by iteration `k`, together with the state scalars at
/// `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCoefficients {
    /// Extrapolation weight on `x^k`; zero at `k = 0`.
    pub beta: f64,
    /// Prox scale: the prox step is `delta / L`.
    pub delta: f64,
    pub a_next: f64,
    pub sigma_next: f64,
}

/// Advances the recursion one step:
///
/// ```text
/// A_{k+1} = ((1 + q) A_k + 2 (1 + sigma_k)) / (1 - q)^2
/// beta_k  = A_k / ((1 - q) A_{k+1})
/// delta_k = sqrt(A_{k+1} / (1 + q A_{k+1}))
/// ```
///
/// Fails with [`Error::ScheduleOverflow`] when `A_{k+1}` would exceed
/// [`OVERFLOW_LIMIT`]; the error names the last supported horizon.
pub fn advance_schedule(state: &ScheduleState) -> Result<(StepCoefficients, ScheduleState)> {
    let q = state.q;
    let one_minus_q_sq = (1.0 - q) * (1.0 - q);
    let a_next = ((1.0 + q) * state.a + 2.0 * (1.0 + state.sigma)) / one_minus_q_sq;
    if !a_next.is_finite() || a_next > OVERFLOW_LIMIT {
        return Err(Error::ScheduleOverflow {
            q,
            limit: OVERFLOW_LIMIT,
            max_horizon: state.k,
        });
    }
    let beta = state.a / ((1.0 - q) * a_next);
    let delta = (a_next / (1.0 + q * a_next)).sqrt();
    let next = ScheduleState::from_a(state.k + 1, q, a_next);
    Ok((
        StepCoefficients {
            beta,
            delta,
            a_next,
            sigma_next: next.sigma,
        },
        next,
    ))
}

/// Stationary limits of the coefficient sequences as `k -> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleLimits {
    /// `beta_k -> (1 - sqrt(q)) / (1 + sqrt(q))`
    pub beta: f64,
    /// `delta_k -> 1 / sqrt(q)`
    pub delta: f64,
    /// `A_k / A_{k+1} -> (1 - sqrt(q))^2`
    pub a_ratio: f64,
    /// `sigma_k / A_k -> sqrt(q)`
    pub sigma_over_a: f64,
}

pub fn schedule_limits(q: f64) -> Result<ScheduleLimits> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParams(format!("q must lie in (0, 1), got {q}")));
    }
    let r = q.sqrt();
    Ok(ScheduleLimits {
        beta: (1.0 - r) / (1.0 + r),
        delta: 1.0 / r,
        a_ratio: (1.0 - r) * (1.0 - r),
        sigma_over_a: r,
    })
}

/// Constant coefficients of the stationary method, obtained by substituting
/// the [`ScheduleLimits`] into the nonstationary update rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmmCoefficients {
    /// `2 sqrt(q) / (1 + sqrt(q))`, weight on `z^k` in the extrapolation
    pub y_z_weight: f64,
    /// `(1 - sqrt(q)) / (1 + sqrt(q))`, weight on `x^k`; the limit of `beta_k`
    pub y_x_weight: f64,
    /// `1 - sqrt(q)`
    pub zbar_z_weight: f64,
    /// `sqrt(q)`
    pub zbar_y_weight: f64,
    /// `1 / (sqrt(q) L)`, gradient coefficient in the pre-prox point
    pub grad_step: f64,
    /// `1 / (sqrt(q) L)`, the prox step; `sqrt(q) L` times it recovers the
    /// subgradient from the prox displacement
    pub prox_gamma: f64,
    /// `sqrt(q)`, weight of the prox correction in the `x`-update
    pub correction: f64,
}

impl TmmCoefficients {
    pub fn new(params: ProblemClassParams) -> Self {
        let r = params.q().sqrt();
        let l = params.lipschitz();
        TmmCoefficients {
            y_z_weight: 2.0 * r / (1.0 + r),
            y_x_weight: (1.0 - r) / (1.0 + r),
            zbar_z_weight: 1.0 - r,
            zbar_y_weight: r,
            grad_step: 1.0 / (r * l),
            prox_gamma: 1.0 / (r * l),
            correction: r,
        }
    }
}

/// A generated prefix of the recursion: states `0..=horizon` and the
/// coefficients used by iterations `0..horizon`.
#[derive(Debug, Clone)]
pub struct Schedule {
    states: Vec<ScheduleState>,
    coeffs: Vec<StepCoefficients>,
}

impl Schedule {
    pub fn generate(q: f64, horizon: usize) -> Result<Schedule> {
        let mut states = Vec::with_capacity(horizon + 1);
        let mut coeffs = Vec::with_capacity(horizon);
        let mut state = ScheduleState::initial(q)?;
        states.push(state);
        for _ in 0..horizon {
            let (c, next) = advance_schedule(&state)?;
            coeffs.push(c);
            states.push(next);
            state = next;
        }
        Ok(Schedule { states, coeffs })
    }

    pub fn q(&self) -> f64 {
        self.states[0].q
    }

    pub fn horizon(&self) -> usize {
        self.coeffs.len()
    }

    /// State at index `k`, valid for `k <= horizon`.
    pub fn state(&self, k: usize) -> &ScheduleState {
        &self.states[k]
    }

    pub fn states(&self) -> &[ScheduleState] {
        &self.states
    }

    /// Coefficients of iteration `k`, valid for `k < horizon`.
    pub fn coefficients(&self, k: usize) -> &StepCoefficients {
        &self.coeffs[k]
    }

    /// Residuals of the four polynomial identities at iteration `k`. All four
    /// vanish identically for the generated parameters:
    ///
    /// ```text
    /// p0 = A_k - (1 - q) A_{k+1} beta_k
    /// p1 = delta_k (A_k - (1 + q) A_{k+1}) + 2 A_{k+1}
    /// p2 = delta_k (sigma_k - 1) - A_k
    /// p3 = A_{k+1} - (1 + q A_{k+1}) delta_k^2
    /// ```
    pub fn identity_residuals(&self, k: usize) -> [f64; 4] {
        let q = self.q();
        let a = self.states[k].a;
        let sigma = self.states[k].sigma;
        let c = &self.coeffs[k];
        [
            a - (1.0 - q) * c.a_next * c.beta,
            c.delta * (a - (1.0 + q) * c.a_next) + 2.0 * c.a_next,
            c.delta * (sigma - 1.0) - a,
            c.a_next - (1.0 + q * c.a_next) * c.delta * c.delta,
        ]
    }

    /// CSV dump: one row per state index with the coefficients and identity
    /// residuals of the iteration starting there; the final state row leaves
    /// those cells empty. Numbers use shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,A_k,sigma_k,beta_k,delta_k,p0,p1,p2,p3\n");
        for (k, state) in self.states.iter().enumerate() {
            if k < self.coeffs.len() {
                let c = &self.coeffs[k];
                let [p0, p1, p2, p3] = self.identity_residuals(k);
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    k, state.a, state.sigma, c.beta, c.delta, p0, p1, p2, p3
                ));
            } else {
                out.push_str(&format!("{},{},{},,,,,,\n", k, state.a, state.sigma));
            }
        }
        out
    }
}

/// The eight per-iteration sign facts of the coefficient sequences, each
/// evaluated with tolerance `-1e-12 * max(1, A_{k+1})`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignChecks {
    pub k: usize,
    /// `A_k >= 0`
    pub a_nonneg: bool,
    /// `A_{k+1} > 0`
    pub a_next_positive: bool,
    /// `delta_k > 0`
    pub delta_positive: bool,
    /// `A_{k+1} - A_k >= 0`
    pub a_increment: bool,
    /// `A_{k+1} - A_k + sigma_{k+1} - sigma_k >= 0`
    pub a_sigma_increment: bool,
    /// `(1 + q) A_{k+1} - A_k >= 0`
    pub g_weight_one: bool,
    /// `(1 + q) A_{k+1} - A_k - sigma_k + 1 >= 0`
    pub g_weight_two: bool,
    /// `sigma_k - 1 >= 0`
    pub sigma_above_one: bool,
}

impl SignChecks {
    pub fn all_hold(&self) -> bool {
        self.a_nonneg
            && self.a_next_positive
            && self.delta_positive
            && self.a_increment
            && self.a_sigma_increment
            && self.g_weight_one
            && self.g_weight_two
            && self.sigma_above_one
    }
}

/// Report-only evaluation of the eight sign facts at every iteration of a
/// generated schedule.
pub fn verify_schedule_signs(schedule: &Schedule) -> Vec<SignChecks> {
    let q = schedule.q();
    (0..schedule.horizon())
        .map(|k| {
            let state = schedule.state(k);
            let c = schedule.coefficients(k);
            let tol = -1e-12 * c.a_next.max(1.0);
            SignChecks {
                k,
                a_nonneg: state.a >= tol,
                a_next_positive: c.a_next > 0.0,
                delta_positive: c.delta > 0.0,
                a_increment: c.a_next - state.a >= tol,
                a_sigma_increment: c.a_next - state.a + c.sigma_next - state.sigma >= tol,
                g_weight_one: (1.0 + q) * c.a_next - state.a >= tol,
                g_weight_two: (1.0 + q) * c.a_next - state.a - state.sigma + 1.0 >= tol,
                sigma_above_one: state.sigma - 1.0 >= tol,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Frozen from a 60-digit evaluation of the recursion at q = 1/4, which
    // matches the radical closed forms sigma_1 = 5 sqrt(73) / 9 and
    // A_2 = (1568 + 160 sqrt(73)) / 81 exactly.
    const A2_EXPECTED: f64 = 36.23506912655315;
    const BETA1_EXPECTED: f64 = 0.261665886392181;
    const DELTA1_EXPECTED: f64 = 1.8979823385903727;
    const SIGMA1_EXPECTED: f64 = 4.746668747398628;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn initial_state() {
        let s = ScheduleState::initial(0.25).unwrap();
        assert_eq!((s.k, s.a, s.sigma), (0, 0.0, 1.0));
        assert!(ScheduleState::initial(0.0).is_err());
        assert!(ScheduleState::initial(1.0).is_err());
        assert!(ScheduleState::initial(1.5).is_err());
        assert!(ScheduleState::initial(1.0 - 1e-9).is_err());
    }

    #[test]
    fn first_step_at_quarter() {
        let s0 = ScheduleState::initial(0.25).unwrap();
        let (c0, s1) = advance_schedule(&s0).unwrap();
        // A_1 = 64/9, delta_0 = 1.6 exactly (delta_0^2 = (64/9)/(25/9) = 64/25)
        assert!(rel(c0.a_next, 64.0 / 9.0) <= 1e-15, "A_1 = {}", c0.a_next);
        assert!(rel(c0.delta, 1.6) <= 1e-15, "delta_0 = {}", c0.delta);
        assert_eq!(c0.beta, 0.0);
        assert!(rel(s1.sigma, SIGMA1_EXPECTED) <= 1e-15, "sigma_1 = {}", s1.sigma);

        let (c1, _s2) = advance_schedule(&s1).unwrap();
        assert!(rel(c1.a_next, A2_EXPECTED) <= 1e-14, "A_2 = {}", c1.a_next);
        assert!(rel(c1.beta, BETA1_EXPECTED) <= 1e-14, "beta_1 = {}", c1.beta);
        assert!(rel(c1.delta, DELTA1_EXPECTED) <= 1e-14, "delta_1 = {}", c1.delta);
        // radical route for A_2 agrees with the recursion
        let a2_radical = (1568.0 + 160.0 * 73f64.sqrt()) / 81.0;
        assert!(rel(c1.a_next, a2_radical) <= 1e-15);
    }

    #[test]
    fn sign_facts_hold_at_quarter() {
        let schedule = Schedule::generate(0.25, 11).unwrap();
        for checks in verify_schedule_signs(&schedule) {
            assert!(checks.all_hold(), "sign fact failed at k = {}", checks.k);
        }
        // boundary case: sigma_0 - 1 = 0 exactly
        assert_eq!(schedule.state(0).sigma - 1.0, 0.0);
        // A_2 - A_1 from the frozen values
        let inc = schedule.state(2).a - schedule.state(1).a;
        assert!(rel(inc, 29.123958015442035) <= 1e-14, "A_2 - A_1 = {inc}");
    }

    #[test]
    fn identity_residuals_vanish() {
        for q in [0.01, 0.0625, 0.25] {
            let schedule = Schedule::generate(q, 60).unwrap();
            for k in 0..schedule.horizon() {
                let a_next = schedule.coefficients(k).a_next;
                let [p0, p1, p2, p3] = schedule.identity_residuals(k);
                let scaled = 1e-12 * a_next.max(1.0);
                assert!(p0.abs() <= scaled, "p0 = {p0} at q={q}, k={k}");
                assert!(p1.abs() <= scaled, "p1 = {p1} at q={q}, k={k}");
                assert!(p2.abs() <= scaled, "p2 = {p2} at q={q}, k={k}");
                assert!(p3.abs() <= 1e-12 * a_next, "p3 = {p3} at q={q}, k={k}");
            }
        }
    }

    #[test]
    fn growth_increment_lower_bound() {
        for q in [0.01, 0.0625, 0.25, 0.9] {
            let floor = 4.0 / ((1.0 - q) * (1.0 - q));
            let schedule = Schedule::generate(q, 40).unwrap();
            for k in 0..schedule.horizon() {
                let inc = schedule.state(k + 1).a - schedule.state(k).a;
                assert!(inc >= floor, "increment {inc} < {floor} at q={q}, k={k}");
            }
        }
    }

    #[test]
    fn coefficients_converge_to_limits() {
        for q in [0.01, 0.0625, 0.25] {
            let limits = schedule_limits(q).unwrap();
            let schedule = Schedule::generate(q, 200).unwrap();
            let err = |k: usize| {
                let c = schedule.coefficients(k);
                ((c.beta - limits.beta).abs(), (c.delta - limits.delta).abs())
            };
            let mut hit = None;
            for k in 0..schedule.horizon() {
                let (eb, ed) = err(k);
                if eb <= 1e-6 && ed <= 1e-6 {
                    hit = Some(k);
                    break;
                }
                if k > 5 {
                    let (pb, pd) = err(k - 1);
                    assert!(eb <= pb && ed <= pd, "error not decreasing at q={q}, k={k}");
                }
            }
            assert!(hit.is_some(), "no convergence below 1e-6 within 200 at q={q}");
        }
    }

    #[test]
    fn limits_examples() {
        let l = schedule_limits(0.25).unwrap();
        assert_eq!(l.beta, 1.0 / 3.0);
        assert_eq!(l.delta, 2.0);
        assert_eq!(l.a_ratio, 0.25);
        assert_eq!(l.sigma_over_a, 0.5);

        let l = schedule_limits(0.01).unwrap();
        assert!(rel(l.beta, 0.9 / 1.1) <= 1e-15);
        assert!(rel(l.delta, 10.0) <= 1e-15);
        assert!(rel(l.a_ratio, 0.81) <= 1e-15);
        assert!(rel(l.sigma_over_a, 0.1) <= 1e-15);

        // continuity toward q -> 1: limits approach (0, 1, 0, 1)
        let l = schedule_limits(1.0 - 1e-9).unwrap();
        assert!(l.beta.abs() < 1e-9 && (l.delta - 1.0).abs() < 1e-9);
        assert!(l.a_ratio.abs() < 1e-9 && (l.sigma_over_a - 1.0).abs() < 1e-9);

        assert!(schedule_limits(0.0).is_err());
        assert!(schedule_limits(1.5).is_err());
    }

    #[test]
    fn tmm_coefficients_at_quarter() {
        let params = ProblemClassParams::new(1.0, 4.0).unwrap();
        let c = TmmCoefficients::new(params);
        assert!(rel(c.y_z_weight, 2.0 / 3.0) <= 1e-15);
        assert!(rel(c.y_x_weight, 1.0 / 3.0) <= 1e-15);
        assert_eq!(c.zbar_z_weight, 0.5);
        assert_eq!(c.zbar_y_weight, 0.5);
        assert_eq!(c.grad_step, 2.0 / 4.0);
        assert_eq!(c.prox_gamma, 2.0 / 4.0);
        assert_eq!(c.correction, 0.5);
        // the weights are convex combinations and match the schedule limits
        assert!((c.y_z_weight + c.y_x_weight - 1.0).abs() <= 1e-15);
        assert!((c.zbar_z_weight + c.zbar_y_weight - 1.0).abs() <= 1e-15);
        let limits = schedule_limits(0.25).unwrap();
        assert_eq!(c.y_x_weight, limits.beta);
        assert_eq!(1.0 / 0.25f64.sqrt(), limits.delta);
    }

    #[test]
    fn overflow_reports_horizon() {
        // q = 0.25 grows by about 4x per step, so 1e300 is crossed near k = 498
        let err = Schedule::generate(0.25, 1000).unwrap_err();
        match err {
            Error::ScheduleOverflow { q, max_horizon, .. } => {
                assert_eq!(q, 0.25);
                assert!(
                    (490..=505).contains(&max_horizon),
                    "unexpected horizon {max_horizon}"
                );
                // the reported horizon is exactly achievable
                assert!(Schedule::generate(0.25, max_horizon).is_ok());
                assert!(Schedule::generate(0.25, max_horizon + 1).is_err());
            }
            other => panic!("expected overflow, got {other}"),
        }
    }

    #[test]
    fn csv_shape() {
        let schedule = Schedule::generate(0.25, 2).unwrap();
        let csv = schedule.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,A_k,sigma_k,beta_k,delta_k,p0,p1,p2,p3");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0,1,0,1.6,"), "{}", lines[1]);
        assert!(lines[2].starts_with("1,7.111111111111111,"), "{}", lines[2]);
        assert!(lines[3].ends_with(",,,,,,"), "{}", lines[3]);

        let tiny = Schedule::generate(0.25, 0).unwrap();
        assert_eq!(tiny.to_csv().lines().count(), 2);
    }

    proptest! {
        #[test]
        fn first_growth_value_closed_form(q in 1e-4..0.99f64) {
            let s0 = ScheduleState::initial(q).unwrap();
            let (c0, _) = advance_schedule(&s0).unwrap();
            // sigma_0 = 1 forces the numerator to 4
            prop_assert_eq!(c0.a_next, 4.0 / ((1.0 - q) * (1.0 - q)));
        }

        #[test]
        fn sign_facts_hold_generically(q in 1e-4..0.9f64, horizon in 1usize..40) {
            let schedule = Schedule::generate(q, horizon).unwrap();
            for checks in verify_schedule_signs(&schedule) {
                prop_assert!(checks.all_hold(), "failed at k = {}", checks.k);
            }
        }

        #[test]
        fn sigma_invariant_rebuildable(q in 1e-4..0.9f64, horizon in 1usize..30) {
            let schedule = Schedule::generate(q, horizon).unwrap();
            for state in schedule.states() {
                let expected = ((1.0 + state.a) * (1.0 + q * state.a)).sqrt();
                let rel = (state.sigma - expected).abs() / expected;
                prop_assert!(rel <= 1e-12);
            }
        }
    }
}
