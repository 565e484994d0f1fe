//! Dual certificate construction and verification.
//!
//! Each supported program family pairs an offline primal program with its
//! Fenchel dual. The builders read a finished trace and assign the dual
//! variables mechanically from the trajectory, so a feasible certificate is
//! a machine-checked witness that the run's cost is bounded by the dual
//! objective plus the reported slack terms.
//!
//! ```text
//! family        primal                        dual objective
//! OCO_PBALL     fixed point in a p-ball       -radius * sum a_t
//! DRIFT_EXPERT  drifting simplex path         -sum a_t - alpha*L
//! ONELA_2BALL   moving point in a 2-ball      sum c_t.k - radius * sum a_t
//! ONELA_MTS     unfair task system            sum a_t
//! ```

use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::engine::{Lookahead, Trace};
use crate::error::{Error, Result};
use crate::norm::{dual_exponent, norm, NormSpec};
use crate::regularizer::RegularizerKind;
use crate::vector::Vector;

/// Default absolute tolerance for feasibility checks. Looser than the
/// identity tolerances because builders compose several float operations.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-8;

/// The four offline program pairs with implemented dual builders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProgramFamily {
    OcoPball,
    DriftExpert,
    Onela2Ball,
    OnelaMts,
}

impl std::fmt::Display for ProgramFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProgramFamily::OcoPball => "OCO_PBALL",
            ProgramFamily::DriftExpert => "DRIFT_EXPERT",
            ProgramFamily::Onela2Ball => "ONELA_2BALL",
            ProgramFamily::OnelaMts => "ONELA_MTS",
        };
        write!(f, "{s}")
    }
}

/// A fully assigned dual solution.
///
/// Index conventions per family (`T` = number of rounds):
/// - `OCO_PBALL`: `a[t]` is `a_t` for `t = 0..T-1`; `b[j]` is `b_{j+1}`
///   for `j = 0..T-1`.
/// - `DRIFT_EXPERT`: same index layout as `OCO_PBALL`.
/// - `ONELA_2BALL` and `ONELA_MTS`: `a[t]` is `a_t` for `t = 0..T`;
///   `b[j]` is `b_{j+1}` for `j = 0..T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub program: ProgramFamily,
    pub a: Vec<f64>,
    pub b: Vec<Vector>,
    /// Cap on the componentwise / normwise size of `b` (simplex families).
    pub alpha: Option<f64>,
    /// Comparator movement budget entering the `DRIFT_EXPERT` objective.
    pub drift_budget: Option<f64>,
    pub eta: f64,
    pub objective: f64,
    /// Which start-round convention produced `a[0]`.
    pub a0_rule: String,
}

impl DualCertificate {
    /// `opt_value - objective`; nonnegative up to the oracle's own accuracy,
    /// because the dual objective lower-bounds the offline optimum.
    pub fn weak_duality_gap(&self, opt_value: f64) -> f64 {
        opt_value - self.objective
    }
}

/// One violated constraint row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Stable identifier of the constraint group.
    pub constraint: String,
    /// Time index of the row.
    pub t: usize,
    /// Coordinate index for componentwise rows.
    pub i: Option<usize>,
    /// How far past the tolerance the row is (positive).
    pub magnitude: f64,
}

/// Outcome of checking every constraint row of a program against a
/// certificate. Empty `violations` means feasible at `tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub program: ProgramFamily,
    pub tol: f64,
    /// Number of constraint rows evaluated, including ones that cannot fire.
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn ensure_eta(trace: &Trace, eta: f64) -> Result<()> {
    if (trace.eta - eta).abs() > 1e-12 * trace.eta.abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "certificate step size {eta} does not match the trace's {}",
            trace.eta
        )));
    }
    Ok(())
}

fn origin_like(v: &Vector) -> bool {
    v.iter().all(|c| *c == 0.0)
}

/// Shift consistent with the cap `alpha`: `theta = 1 / (e^{eta alpha} - 1)`,
/// the smallest shift keeping every `b` coordinate within `[0, alpha]`.
pub fn shift_for_cap(eta: f64, alpha: f64) -> f64 {
    1.0 / (eta * alpha).exp_m1()
}

fn ensure_shift_matches(theta: f64, eta: f64, alpha: f64) -> Result<()> {
    let expected = shift_for_cap(eta, alpha);
    if (theta - expected).abs() > 1e-9 * expected.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "regularizer shift {theta} inconsistent with cap {alpha}: expected {expected}"
        )));
    }
    Ok(())
}

/// Dual assignment for the fixed-comparator p-ball program from a
/// 0-lookahead run: `b_t = -grad R(x_t)/eta` and
/// `a_t = ||grad R(y_{t+1}) - grad R(x_{t+1})||_q / eta`, with the start
/// round folding in `grad R(x_0)`. The step constraints hold with equality
/// by construction.
pub fn build_oco_pball(trace: &Trace, eta: f64) -> Result<DualCertificate> {
    ensure_eta(trace, eta)?;
    if trace.lookahead != Lookahead::Zero {
        return Err(Error::InvalidInput(
            "fixed-comparator ball certificates require a zero-lookahead trace".into(),
        ));
    }
    let radius = match &trace.body {
        Body::PBall { center, radius, .. } if origin_like(center) => *radius,
        Body::PBall { .. } => {
            return Err(Error::InvalidInput(
                "fixed-comparator ball certificates require an origin-centered ball".into(),
            ))
        }
        Body::Simplex { .. } => {
            return Err(Error::InvalidInput(
                "fixed-comparator ball certificates require a p-ball body".into(),
            ))
        }
    };
    match trace.regularizer.kind() {
        RegularizerKind::PNormSquared { .. } => {}
        RegularizerKind::CenteredSquaredL2 { center } if origin_like(center) => {}
        other => {
            return Err(Error::InvalidInput(format!(
                "unsupported regularizer for the fixed-comparator ball program: {other:?}"
            )))
        }
    }
    let q = trace.regularizer.dual_reference();
    let reg = &trace.regularizer;
    let t_len = trace.len();

    let mut b = Vec::with_capacity(t_len);
    for step in &trace.steps {
        b.push(reg.gradient(&step.x)?.scale(-1.0 / eta)?);
    }
    let mut a = Vec::with_capacity(t_len + 1);
    if let Some(first) = trace.steps.first() {
        let start_vec = first
            .y_gradient
            .sub(&reg.gradient(&first.x)?)?
            .sub(&reg.gradient(&trace.x0)?)?;
        a.push(norm(start_vec.as_slice(), &q) / eta);
    }
    for t in 1..t_len {
        let step = &trace.steps[t];
        let v = step.y_gradient.sub(&reg.gradient(&step.x)?)?;
        a.push(norm(v.as_slice(), &q) / eta);
    }
    // Closing row of the constant-path dual: the telescoped multiplier chain
    // must absorb the final gradient, so one more step multiplier covers
    // ||b_T||. Holds with equality by construction and makes the objective
    // a true lower bound on the best fixed point's cost. The regret bounds
    // sum only the first T entries.
    if let Some(last) = b.last() {
        a.push(norm(last.as_slice(), &q));
    }
    let objective = -radius * a.iter().sum::<f64>();
    Ok(DualCertificate {
        program: ProgramFamily::OcoPball,
        a,
        b,
        alpha: None,
        drift_budget: None,
        eta,
        objective,
        a0_rule: "norm(grad_y1 - grad_x1 - grad_x0)/eta".into(),
    })
}

/// Dual assignment for the drifting-comparator simplex program from a
/// 0-lookahead shifted-entropy run: `b_{i,t} = [grad R(1) - grad R(x_t)]_i
/// / eta`, `a_t` is the projection multiplier of round `t+1` over `eta`,
/// and `alpha` caps the `b` coordinates. The objective charges the supplied
/// comparator movement budget against `alpha`.
pub fn build_drift_expert(
    trace: &Trace,
    eta: f64,
    alpha: f64,
    drift_budget: f64,
) -> Result<DualCertificate> {
    ensure_eta(trace, eta)?;
    if trace.lookahead != Lookahead::Zero {
        return Err(Error::InvalidInput(
            "drifting-expert certificates require a zero-lookahead trace".into(),
        ));
    }
    if !matches!(trace.body, Body::Simplex { .. }) {
        return Err(Error::InvalidInput(
            "drifting-expert certificates require a simplex body".into(),
        ));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "the drift cap must be positive and finite, got {alpha}"
        )));
    }
    if !drift_budget.is_finite() || drift_budget < 0.0 {
        return Err(Error::InvalidInput(format!(
            "the drift budget must be nonnegative, got {drift_budget}"
        )));
    }
    match trace.regularizer.kind() {
        RegularizerKind::ShiftedNegEntropy { shift, .. } => {
            ensure_shift_matches(*shift, eta, alpha)?
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "drifting-expert certificates require the shifted entropy map, got {other:?}"
            )))
        }
    }
    let reg = &trace.regularizer;
    let n = trace.body.dim();
    let grad_ones = reg.gradient(&Vector::constant(n, 1.0)?)?;
    let t_len = trace.len();

    let mut b = Vec::with_capacity(t_len);
    for step in &trace.steps {
        b.push(grad_ones.sub(&reg.gradient(&step.x)?)?.scale(1.0 / eta)?);
    }
    let mut a = Vec::with_capacity(t_len);
    if let Some(first) = trace.steps.first() {
        let a0 = b[0]
            .iter()
            .zip(first.cost.iter())
            .map(|(bi, ci)| bi - ci)
            .fold(f64::NEG_INFINITY, f64::max);
        a.push(a0);
    }
    for t in 1..t_len {
        a.push(trace.steps[t].lambda / eta);
    }
    let objective = -a.iter().sum::<f64>() - alpha * drift_budget;
    Ok(DualCertificate {
        program: ProgramFamily::DriftExpert,
        a,
        b,
        alpha: Some(alpha),
        drift_budget: Some(drift_budget),
        eta,
        objective,
        a0_rule: "max_i(b_1 - c_1)".into(),
    })
}

/// Dual assignment for the moving-point 2-ball program from a 1-lookahead
/// run: `b_{t+1} = -grad R(x_t - k)/eta`, `a_t = ||grad R(y_t - k) -
/// grad R(x_t - k)||_2 / eta` for `t >= 1`, and `a_0 = ||x_0 - k||_2 / eta`.
/// Feasibility of the unit cap on `b` relies on `eta >= radius`.
pub fn build_onela_2ball(trace: &Trace, eta: f64) -> Result<DualCertificate> {
    ensure_eta(trace, eta)?;
    if trace.lookahead != Lookahead::One {
        return Err(Error::InvalidInput(
            "moving-point ball certificates require a one-lookahead trace".into(),
        ));
    }
    let (center, radius) = match &trace.body {
        Body::PBall { p, center, radius } if p.as_f64() == 2.0 => (center.clone(), *radius),
        _ => {
            return Err(Error::InvalidInput(
                "moving-point ball certificates require a 2-ball body".into(),
            ))
        }
    };
    match trace.regularizer.kind() {
        RegularizerKind::CenteredSquaredL2 { center: rc } if rc == &center => {}
        _ => {
            return Err(Error::InvalidInput(
                "moving-point ball certificates require the squared-l2 map centered at the ball"
                    .into(),
            ))
        }
    }
    let reg = &trace.regularizer;
    let t_len = trace.len();
    let two = NormSpec::Finite(2.0);

    let mut b = Vec::with_capacity(t_len + 1);
    b.push(reg.gradient(&trace.x0)?.scale(-1.0 / eta)?);
    for step in &trace.steps {
        b.push(reg.gradient(&step.x)?.scale(-1.0 / eta)?);
    }
    let mut a = Vec::with_capacity(t_len + 1);
    a.push(norm(reg.gradient(&trace.x0)?.as_slice(), &two) / eta);
    for step in &trace.steps {
        let v = step.y_gradient.sub(&reg.gradient(&step.x)?)?;
        a.push(norm(v.as_slice(), &two) / eta);
    }
    let service_at_center: f64 = trace
        .steps
        .iter()
        .map(|s| s.cost.dot(&center))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    let objective = service_at_center - radius * a.iter().sum::<f64>();
    Ok(DualCertificate {
        program: ProgramFamily::Onela2Ball,
        a,
        b,
        alpha: None,
        drift_budget: None,
        eta,
        objective,
        a0_rule: "norm(x_0 - center)/eta".into(),
    })
}

/// Dual assignment for the unfair task-system program from a 1-lookahead
/// shifted-entropy run: `b_{t+1} = [grad R(1) - grad R(x_t)]/eta`,
/// `a_t = -lambda_t/eta` from the projection multiplier of round `t`, and
/// `a_0 = -max_i b_{i,1}`.
pub fn build_onela_mts(trace: &Trace, eta: f64, alpha: f64) -> Result<DualCertificate> {
    ensure_eta(trace, eta)?;
    if trace.lookahead != Lookahead::One {
        return Err(Error::InvalidInput(
            "task-system certificates require a one-lookahead trace".into(),
        ));
    }
    if !matches!(trace.body, Body::Simplex { .. }) {
        return Err(Error::InvalidInput(
            "task-system certificates require a simplex body".into(),
        ));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "the unfairness cap must be positive and finite, got {alpha}"
        )));
    }
    match trace.regularizer.kind() {
        RegularizerKind::ShiftedNegEntropy { shift, .. } => {
            ensure_shift_matches(*shift, eta, alpha)?
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "task-system certificates require the shifted entropy map, got {other:?}"
            )))
        }
    }
    let reg = &trace.regularizer;
    let n = trace.body.dim();
    let grad_ones = reg.gradient(&Vector::constant(n, 1.0)?)?;
    let t_len = trace.len();

    let mut b = Vec::with_capacity(t_len + 1);
    b.push(grad_ones.sub(&reg.gradient(&trace.x0)?)?.scale(1.0 / eta)?);
    for step in &trace.steps {
        b.push(grad_ones.sub(&reg.gradient(&step.x)?)?.scale(1.0 / eta)?);
    }
    let mut a = Vec::with_capacity(t_len + 1);
    let a0 = -b[0].iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    a.push(a0);
    for step in &trace.steps {
        a.push(-step.lambda / eta);
    }
    let objective = a.iter().sum::<f64>();
    Ok(DualCertificate {
        program: ProgramFamily::OnelaMts,
        a,
        b,
        alpha: Some(alpha),
        drift_budget: None,
        eta,
        objective,
        a0_rule: "-max_i b_1".into(),
    })
}

/// Evaluates every constraint row of the certificate's program against the
/// cost sequence and body, reporting each violated row. Feasibility issues
/// are reported, not errored; only shape mismatches return `Err`.
pub fn check_feasibility(
    cert: &DualCertificate,
    costs: &[Vector],
    body: &Body,
) -> Result<FeasibilityReport> {
    check_feasibility_with_tol(cert, costs, body, DEFAULT_FEASIBILITY_TOL)
}

/// `check_feasibility` with an explicit absolute tolerance.
pub fn check_feasibility_with_tol(
    cert: &DualCertificate,
    costs: &[Vector],
    body: &Body,
    tol: f64,
) -> Result<FeasibilityReport> {
    let t_len = costs.len();
    let n = body.dim();
    for c in costs {
        if c.dim() != n {
            return Err(Error::DimensionMismatch(
                "cost dimension does not match the body".into(),
            ));
        }
    }
    for bv in &cert.b {
        if bv.dim() != n {
            return Err(Error::DimensionMismatch(
                "dual vector dimension does not match the body".into(),
            ));
        }
    }
    let (expect_a, expect_b) = match cert.program {
        ProgramFamily::OcoPball => (if t_len == 0 { 0 } else { t_len + 1 }, t_len),
        ProgramFamily::DriftExpert => (t_len, t_len),
        ProgramFamily::Onela2Ball | ProgramFamily::OnelaMts => (t_len + 1, t_len + 1),
    };
    if cert.a.len() != expect_a || cert.b.len() != expect_b {
        return Err(Error::InvalidInput(format!(
            "certificate for {} over {} rounds needs {} step and {} point duals, got a: {}, b: {}",
            cert.program,
            t_len,
            expect_a,
            expect_b,
            cert.a.len(),
            cert.b.len()
        )));
    }

    let mut checked = 0usize;
    let mut violations = Vec::new();
    let mut push = |constraint: &str, t: usize, i: Option<usize>, excess: f64| {
        if excess > tol {
            violations.push(Violation {
                constraint: constraint.to_string(),
                t,
                i,
                magnitude: excess,
            });
        }
    };

    match cert.program {
        ProgramFamily::OcoPball => {
            let q = match body {
                Body::PBall { p, .. } => dual_exponent(p),
                Body::Simplex { .. } => {
                    return Err(Error::InvalidInput(
                        "fixed-comparator ball certificates need a p-ball body".into(),
                    ))
                }
            };
            // a_0 >= ||b_1 - c_1||_q
            if t_len > 0 {
                checked += 1;
                let start = cert.b[0].sub(&costs[0])?;
                push("dual_start", 0, None, norm(start.as_slice(), &q) - cert.a[0]);
            }
            // a_t >= ||b_{t+1} - b_t - c_{t+1}||_q for t = 1..T-1
            for t in 1..t_len {
                checked += 1;
                let v = cert.b[t].sub(&cert.b[t - 1])?.sub(&costs[t])?;
                push("dual_step", t, None, norm(v.as_slice(), &q) - cert.a[t]);
            }
            // a_T >= ||b_T||_q: the closing row that lets the multiplier
            // chain telescope shut, so the objective lower-bounds every
            // fixed point in the ball.
            if t_len > 0 {
                checked += 1;
                push(
                    "dual_close",
                    t_len,
                    None,
                    norm(cert.b[t_len - 1].as_slice(), &q) - cert.a[t_len],
                );
            }
            // ||b_t||_q <= infinity: listed in the program but can never
            // fire; counted so the row totals match the program text.
            checked += t_len;
        }
        ProgramFamily::DriftExpert => {
            let alpha = cert.alpha.ok_or_else(|| {
                Error::InvalidInput("drifting-expert certificates carry a cap".into())
            })?;
            checked += 1;
            push("alpha_nonneg", 0, None, -alpha);
            if t_len > 0 {
                for i in 0..n {
                    checked += 1;
                    push(
                        "dual_start",
                        0,
                        Some(i),
                        cert.b[0].as_slice()[i] - costs[0].as_slice()[i] - cert.a[0],
                    );
                }
            }
            for t in 1..t_len {
                for i in 0..n {
                    checked += 1;
                    let lhs =
                        cert.b[t].as_slice()[i] - cert.b[t - 1].as_slice()[i] - costs[t].as_slice()[i];
                    push("dual_step", t, Some(i), lhs - cert.a[t]);
                }
            }
            for (j, bv) in cert.b.iter().enumerate() {
                for i in 0..n {
                    checked += 2;
                    push("b_lower", j + 1, Some(i), -bv.as_slice()[i]);
                    push("b_upper", j + 1, Some(i), bv.as_slice()[i] - alpha);
                }
            }
        }
        ProgramFamily::Onela2Ball => {
            let two = NormSpec::Finite(2.0);
            // ||b_t||_2 <= 1 for t = 1..T; the trailing b_{T+1} appears only
            // inside the last step row.
            for t in 1..=t_len {
                checked += 1;
                push(
                    "b_norm_cap",
                    t,
                    None,
                    norm(cert.b[t - 1].as_slice(), &two) - 1.0,
                );
            }
            checked += 1;
            push(
                "dual_start",
                0,
                None,
                norm(cert.b[0].as_slice(), &two) - cert.a[0],
            );
            // a_t >= ||b_{t+1} - b_t - c_t||_2 for t = 1..T
            for t in 1..=t_len {
                checked += 1;
                let v = cert.b[t].sub(&cert.b[t - 1])?.sub(&costs[t - 1])?;
                push("dual_step", t, None, norm(v.as_slice(), &two) - cert.a[t]);
            }
        }
        ProgramFamily::OnelaMts => {
            let alpha = cert.alpha.ok_or_else(|| {
                Error::InvalidInput("task-system certificates carry a cap".into())
            })?;
            for i in 0..n {
                checked += 1;
                push("dual_start", 0, Some(i), cert.a[0] + cert.b[0].as_slice()[i]);
            }
            // b_{i,t+1} <= b_{i,t} + c_{i,t} - a_t for t = 1..T
            for t in 1..=t_len {
                for i in 0..n {
                    checked += 1;
                    let lhs = cert.b[t].as_slice()[i]
                        - cert.b[t - 1].as_slice()[i]
                        - costs[t - 1].as_slice()[i]
                        + cert.a[t];
                    push("dual_step", t, Some(i), lhs);
                }
            }
            for (j, bv) in cert.b.iter().enumerate() {
                for i in 0..n {
                    checked += 2;
                    push("b_lower", j + 1, Some(i), -bv.as_slice()[i]);
                    push("b_upper", j + 1, Some(i), bv.as_slice()[i] - alpha);
                }
            }
        }
    }

    Ok(FeasibilityReport {
        program: cert.program,
        tol,
        checked,
        violations,
    })
}

/// `opt_value - cert.objective` as a free function mirror of the method.
pub fn weak_duality_gap(cert: &DualCertificate, opt_value: f64) -> f64 {
    cert.weak_duality_gap(opt_value)
}
