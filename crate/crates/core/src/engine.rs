//! Mirror-descent trajectory engine over linear costs.
//!
//! Each round applies the update `grad R(y_t) = grad R(x_{t-1}) - eta c_t`
//! followed by a Bregman projection back onto the body. Traces record the
//! pre-projection point in gradient coordinates together with the projection
//! multipliers, because the dual certificate builders read both.

use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::norm::{norm, NormSpec};
use crate::projection::{bregman_project, ProjectionResult};
use crate::regularizer::{Regularizer, RegularizerKind};
use crate::vector::Vector;

/// Whether the cost of a round is charged to the point held before the
/// update (`Zero`) or to the point chosen after seeing the cost (`One`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lookahead {
    Zero,
    One,
}

impl std::fmt::Display for Lookahead {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lookahead::Zero => write!(f, "zero"),
            Lookahead::One => write!(f, "one"),
        }
    }
}

/// A complete problem instance: geometry, mirror map, step size, charging
/// rule, start point, and the cost sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub body: Body,
    pub regularizer: Regularizer,
    pub eta: f64,
    pub lookahead: Lookahead,
    pub x0: Vector,
    pub costs: Vec<Vector>,
}

impl Scenario {
    /// Checks every structural precondition before a run. One-lookahead
    /// instances additionally require nonnegative costs and a body inside
    /// the nonnegative orthant, which the movement analysis relies on.
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "step size must be positive and finite, got {}",
                self.eta
            )));
        }
        let n = self.body.dim();
        for (idx, c) in self.costs.iter().enumerate() {
            if c.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "cost at round {} has dimension {}, body has {}",
                    idx + 1,
                    c.dim(),
                    n
                )));
            }
        }
        if self.x0.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "start point has dimension {}, body has {}",
                self.x0.dim(),
                n
            )));
        }
        if !self.body.contains(&self.x0, 1e-9)? {
            return Err(Error::InvalidInput(format!(
                "start point is infeasible: residual {:.3e}",
                self.body.feasibility_residual(&self.x0)?
            )));
        }
        if let Some(d) = self.regularizer.expected_dim() {
            if d != n {
                return Err(Error::DimensionMismatch(format!(
                    "regularizer expects dimension {d}, body has {n}"
                )));
            }
        }
        pairing_supported(&self.regularizer, &self.body)?;
        // The first update differentiates the regularizer at the start
        // point, so it must lie in the interior of the mirror map's domain.
        self.regularizer.gradient(&self.x0).map_err(|e| {
            Error::InvalidInput(format!("start point outside regularizer domain: {e}"))
        })?;
        if self.lookahead == Lookahead::One {
            if self
                .costs
                .iter()
                .any(|c| c.iter().any(|ci| *ci < 0.0))
            {
                return Err(Error::InvalidInput(
                    "one-lookahead runs require nonnegative costs".into(),
                ));
            }
            if !self.body.in_nonneg_orthant() {
                return Err(Error::InvalidInput(
                    "one-lookahead runs require a body inside the nonnegative orthant".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Confirms the regularizer/body pairing has a projection rule.
pub fn pairing_supported(reg: &Regularizer, body: &Body) -> Result<()> {
    let ok = matches!(
        (reg.kind(), body),
        (RegularizerKind::CenteredSquaredL2 { .. }, Body::PBall { p, .. })
            if p.as_f64() == 2.0
    ) || matches!(
        (reg.kind(), body),
        (RegularizerKind::NegEntropy { .. }, Body::Simplex { .. })
            | (RegularizerKind::ShiftedNegEntropy { .. }, Body::Simplex { .. })
    ) || matches!(
        (reg.kind(), body),
        (RegularizerKind::PNormSquared { p }, Body::PBall { p: bp, .. })
            if (bp.as_f64() - *p).abs() <= 1e-12
    );
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "no projection rule for {:?} onto {:?}",
            reg.kind(),
            body
        )))
    }
}

/// One recorded round of the trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Round index, starting at 1.
    pub t: usize,
    /// The cost vector revealed this round.
    pub cost: Vector,
    /// The post-projection point.
    pub x: Vector,
    /// The pre-projection point in gradient coordinates:
    /// `grad R(x_{t-1}) - eta * cost`.
    pub y_gradient: Vector,
    /// Multiplier of the binding body constraint at the projection.
    pub lambda: f64,
    /// Nonnegativity multipliers (simplex geometries only).
    pub kappa: Option<Vector>,
    /// Cost charged this round under the scenario's lookahead rule.
    pub service: f64,
    /// Raw movement `||x_t - x_{t-1}||` in the trace's movement norm.
    pub movement: f64,
}

/// A finished trajectory with enough state to replay and re-check it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub body: Body,
    pub regularizer: Regularizer,
    pub eta: f64,
    pub lookahead: Lookahead,
    /// Norm used for the per-step movement column (l1 on the simplex,
    /// l2 on balls). Weighting by switching-cost constants happens in the
    /// reporting layer, not here.
    pub movement_norm: NormSpec,
    pub x0: Vector,
    pub steps: Vec<TraceStep>,
    pub total_service: f64,
    pub total_movement: f64,
}

impl Trace {
    /// Number of rounds.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The point held after round `t`, with `t = 0` meaning the start point.
    pub fn point_at(&self, t: usize) -> &Vector {
        if t == 0 {
            &self.x0
        } else {
            &self.steps[t - 1].x
        }
    }
}

/// Runs one mirror-descent update from `x_prev` against `cost`, returning
/// the pre-projection gradient point and the projection outcome.
pub fn omd_step(
    reg: &Regularizer,
    body: &Body,
    eta: f64,
    x_prev: &Vector,
    cost: &Vector,
) -> Result<(Vector, ProjectionResult)> {
    let g = reg.gradient(x_prev)?.add_scaled(-eta, cost)?;
    let proj = bregman_project(reg, body, &g)?;
    Ok((g, proj))
}

/// Movement norm attached to traces over the given body.
pub fn movement_norm_for(body: &Body) -> NormSpec {
    match body {
        Body::Simplex { .. } => NormSpec::Finite(1.0),
        Body::PBall { .. } => NormSpec::Finite(2.0),
    }
}

/// Executes the full trajectory for a validated scenario.
pub fn run(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let movement_norm = movement_norm_for(&scenario.body);
    let mut steps = Vec::with_capacity(scenario.costs.len());
    let mut x_prev = scenario.x0.clone();
    let mut total_service = 0.0;
    let mut total_movement = 0.0;
    for (idx, cost) in scenario.costs.iter().enumerate() {
        let (g, proj) = omd_step(
            &scenario.regularizer,
            &scenario.body,
            scenario.eta,
            &x_prev,
            cost,
        )?;
        let service = match scenario.lookahead {
            Lookahead::Zero => cost.dot(&x_prev)?,
            Lookahead::One => cost.dot(&proj.x)?,
        };
        let movement = norm(proj.x.sub(&x_prev)?.as_slice(), &movement_norm);
        total_service += service;
        total_movement += movement;
        steps.push(TraceStep {
            t: idx + 1,
            cost: cost.clone(),
            x: proj.x.clone(),
            y_gradient: g,
            lambda: proj.lambda,
            kappa: proj.kappa,
            service,
            movement,
        });
        x_prev = proj.x;
    }
    Ok(Trace {
        body: scenario.body.clone(),
        regularizer: scenario.regularizer.clone(),
        eta: scenario.eta,
        lookahead: scenario.lookahead,
        movement_norm,
        x0: scenario.x0.clone(),
        steps,
        total_service,
        total_movement,
    })
}

/// Exact decomposition of the previous-point service cost
/// `S = sum_t cost_t . x_{t-1}` against a comparator path `u_0..u_{T-1}`.
///
/// The scaled service satisfies the identity
///
/// ```text
/// eta S = comparator_variation + boundary_terms + step_divergences
///         + projection_terms
/// ```
///
/// for every comparator path, because the path-dependent pieces cancel:
/// `divergence_drop + gradient_drift` telescopes to the same boundary
/// quantity. `identity_residual` reports the float defect of the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceDecomposition {
    /// `sum_{t=1}^{T-1} (R(u_t) - R(u_{t-1}))`.
    pub comparator_variation: f64,
    /// `B(u_0, x_0) - B(u_{T-1}, x_T) + grad R(x_0).u_0 - grad R(x_T).u_{T-1}`.
    pub boundary_terms: f64,
    /// `sum_{t=1}^T B(x_{t-1}, x_t)`.
    pub step_divergences: f64,
    /// `sum_{t=1}^T [grad R(x_t) - grad R(y_t)] . x_{t-1}`.
    pub projection_terms: f64,
    /// `sum_{t=1}^T [B(u_{t-1}, x_{t-1}) - B(u_{t-1}, x_t)]`.
    pub divergence_drop: f64,
    /// `sum_{t=1}^T [grad R(x_{t-1}) - grad R(x_t)] . u_{t-1}`.
    pub gradient_drift: f64,
    /// `eta * sum_t cost_t . x_{t-1}` recomputed from the trace.
    pub eta_scaled_service: f64,
    /// Absolute defect of the service identity.
    pub identity_residual: f64,
}

/// Computes the service decomposition of a trace against a comparator path
/// with one point per round (`u_0` through `u_{T-1}`).
pub fn service_decomposition(trace: &Trace, comparator: &[Vector]) -> Result<ServiceDecomposition> {
    let t_len = trace.len();
    if comparator.len() != t_len {
        return Err(Error::InvalidInput(format!(
            "comparator path has {} points, trace has {} rounds",
            comparator.len(),
            t_len
        )));
    }
    let reg = &trace.regularizer;
    for u in comparator {
        if u.dim() != trace.body.dim() {
            return Err(Error::DimensionMismatch(
                "comparator point dimension does not match the body".into(),
            ));
        }
    }

    let mut comparator_variation = 0.0;
    for t in 1..t_len {
        comparator_variation += reg.value(&comparator[t])? - reg.value(&comparator[t - 1])?;
    }

    let x_last = trace.point_at(t_len);
    let u_first = &comparator[0];
    let u_last = &comparator[t_len - 1];
    let boundary_terms = reg.bregman(u_first, &trace.x0)? - reg.bregman(u_last, x_last)?
        + reg.gradient(&trace.x0)?.dot(u_first)?
        - reg.gradient(x_last)?.dot(u_last)?;

    let mut step_divergences = 0.0;
    let mut projection_terms = 0.0;
    let mut divergence_drop = 0.0;
    let mut gradient_drift = 0.0;
    let mut eta_scaled_service = 0.0;
    for t in 1..=t_len {
        let x_prev = trace.point_at(t - 1);
        let step = &trace.steps[t - 1];
        let u_prev = &comparator[t - 1];
        step_divergences += reg.bregman(x_prev, &step.x)?;
        let grad_x = reg.gradient(&step.x)?;
        projection_terms += grad_x.sub(&step.y_gradient)?.dot(x_prev)?;
        divergence_drop += reg.bregman(u_prev, x_prev)? - reg.bregman(u_prev, &step.x)?;
        gradient_drift += reg.gradient(x_prev)?.sub(&grad_x)?.dot(u_prev)?;
        eta_scaled_service += trace.eta * step.cost.dot(x_prev)?;
    }

    let identity_residual = (eta_scaled_service
        - (comparator_variation + boundary_terms + step_divergences + projection_terms))
        .abs();
    Ok(ServiceDecomposition {
        comparator_variation,
        boundary_terms,
        step_divergences,
        projection_terms,
        divergence_drop,
        gradient_drift,
        eta_scaled_service,
        identity_residual,
    })
}
