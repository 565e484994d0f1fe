//! Bregman projections onto the simplex and p-balls, with Lagrange
//! multiplier extraction.
//!
//! Multiplier conventions (all in gradient units; callers divide by eta):
//!
//! ```text
//! simplex   [grad R(y) - grad R(x)]_i = lambda - kappa_i,  kappa_i >= 0,
//!           kappa_i x_i = 0, equality where x_i > 0
//! ball      lambda = ||y - k||_p - radius when y is outside, else 0
//! ```

use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::norm::{norm, NormSpec};
use crate::regularizer::{Regularizer, RegularizerKind};
use crate::vector::Vector;

/// Residual tolerance for the 1-D dual root-finders.
const ROOT_TOL: f64 = 1e-12;
/// Iteration cap for the 1-D dual root-finders.
const MAX_ITERS: usize = 200;
/// Coordinates above this threshold count as active for KKT equality.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Outcome of a Bregman projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// The projected point.
    pub x: Vector,
    /// Multiplier of the binding body constraint, 0 when slack.
    pub lambda: f64,
    /// Per-coordinate nonnegativity multipliers (simplex projections only).
    pub kappa: Option<Vector>,
    /// Root-finder iterations (0 for closed forms).
    pub iterations: usize,
    /// Achieved constraint residual.
    pub residual: f64,
}

/// Euclidean (squared-l2 Bregman) projection onto the ball
/// `||x - center||_2 <= radius`. Closed form; `lambda = ||y-k||_2 - radius`
/// when the input is outside, 0 otherwise.
pub fn project_ball_l2(center: &Vector, radius: f64, y: &Vector) -> Result<ProjectionResult> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "project_ball_l2: radius must be > 0, got {radius}"
        )));
    }
    let d = y.sub(center)?;
    let r = norm(d.as_slice(), &NormSpec::Finite(2.0));
    if r <= radius {
        return Ok(ProjectionResult {
            x: y.clone(),
            lambda: 0.0,
            kappa: None,
            iterations: 0,
            residual: 0.0,
        });
    }
    let x = center.add_scaled(radius / r, &d)?;
    let achieved = norm(x.sub(center)?.as_slice(), &NormSpec::Finite(2.0));
    Ok(ProjectionResult {
        x,
        lambda: r - radius,
        kappa: None,
        iterations: 0,
        residual: (achieved - radius).abs(),
    })
}

/// Bregman projection onto the probability simplex under the shifted
/// negative-entropy mirror map with shift `theta > 0`.
///
/// The input is the target gradient vector `g = grad R(y)`, so callers never
/// materialize a pre-projection point that may sit outside the entropy
/// domain. Internally solves `sum_i max(0, e^{g_i - lambda - 1} - theta) = 1`
/// for the scalar `lambda` by bisection.
pub fn project_simplex_shifted_entropy(theta: f64, g: &Vector) -> Result<ProjectionResult> {
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "project_simplex_shifted_entropy: shift must be > 0, got {theta}"
        )));
    }
    simplex_entropy_root(theta, g)
}

/// Shared simplex root-finder; also accepts `theta = 0`, which realizes the
/// plain negative-entropy projection (every output coordinate positive).
pub(crate) fn simplex_entropy_root(theta: f64, g: &Vector) -> Result<ProjectionResult> {
    let coords = |lambda: f64| -> Vec<f64> {
        g.iter()
            .map(|gi| ((gi - lambda - 1.0).exp() - theta).max(0.0))
            .collect()
    };
    let excess = |lambda: f64| -> f64 { coords(lambda).iter().sum::<f64>() - 1.0 };

    let gmax = g.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    // At lo the argmax coordinate alone contributes exactly 1, so the excess
    // is nonnegative; at hi every coordinate clips to zero (theta > 0) or the
    // exponential sum is at most 1 (theta = 0).
    let lo0 = gmax - 1.0 - theta.ln_1p();
    let hi0 = if theta > 0.0 {
        gmax - 1.0 - theta.ln()
    } else {
        gmax - 1.0 + (g.dim() as f64).ln()
    };
    let (mut lo, mut hi) = (lo0, hi0);
    debug_assert!(excess(lo) >= -1e-15, "lower bracket must have excess >= 0");

    let mut lambda = 0.5 * (lo + hi);
    let mut resid = excess(lambda).abs();
    let mut iterations = 0;
    for _ in 0..MAX_ITERS {
        iterations += 1;
        lambda = 0.5 * (lo + hi);
        let e = excess(lambda);
        resid = e.abs();
        if resid <= ROOT_TOL {
            break;
        }
        if e > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    if resid > ROOT_TOL {
        return Err(Error::Numeric(format!(
            "simplex projection did not converge: residual {resid:.3e} after {iterations} iterations"
        )));
    }

    let xs = coords(lambda);
    let sum: f64 = xs.iter().sum();
    let residual = (sum - 1.0).abs();
    let kappa: Vec<f64> = g
        .iter()
        .zip(&xs)
        .map(|(gi, xi)| {
            if *xi > ACTIVE_TOL || theta == 0.0 {
                // Active coordinate: the KKT equality pins kappa to zero.
                0.0
            } else {
                let grad_at_x = (xi + theta).ln() + 1.0;
                (lambda - (gi - grad_at_x)).max(0.0)
            }
        })
        .collect();
    Ok(ProjectionResult {
        x: Vector::computed(xs, "simplex projection")?,
        lambda,
        kappa: Some(Vector::computed(kappa, "simplex multipliers")?),
        iterations,
        residual,
    })
}

/// Bregman projection onto the origin-centered ball `||x||_p <= radius`
/// under the squared p-norm mirror map.
///
/// Realized as a bisection on the scalar multiplier `nu` of the ball
/// constraint: the stationarity condition gives
/// `grad R(x) = grad R(y) / (1 + nu/radius)` on the boundary, and the primal
/// point is recovered through the inverse gradient map. By one-homogeneity
/// of the gradient this search converges to the radial closed form
/// `x = y * radius / ||y||_p`.
pub fn project_pball(reg: &Regularizer, radius: f64, y: &Vector) -> Result<ProjectionResult> {
    let p = match reg.kind() {
        RegularizerKind::PNormSquared { p } => *p,
        other => {
            return Err(Error::InvalidInput(format!(
                "project_pball requires the squared p-norm regularizer, got {other:?}"
            )))
        }
    };
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "project_pball: radius must be > 0, got {radius}"
        )));
    }
    let pnorm = NormSpec::Finite(p);
    let ynorm = norm(y.as_slice(), &pnorm);
    if ynorm <= radius {
        return Ok(ProjectionResult {
            x: y.clone(),
            lambda: 0.0,
            kappa: None,
            iterations: 0,
            residual: 0.0,
        });
    }

    let g = reg.gradient(y)?;
    let point_at = |nu: f64| -> Result<Vector> {
        let scaled = g.scale(1.0 / (1.0 + nu / radius))?;
        reg.gradient_inverse(&scaled)
    };
    let excess = |nu: f64| -> Result<f64> {
        Ok(norm(point_at(nu)?.as_slice(), &pnorm) - radius)
    };

    let mut lo = 0.0;
    let mut hi = (ynorm - radius).max(1.0);
    let mut iterations = 0;
    while excess(hi)? > 0.0 {
        iterations += 1;
        hi *= 2.0;
        if iterations > 60 {
            return Err(Error::Numeric(
                "project_pball: failed to bracket the ball multiplier".into(),
            ));
        }
    }

    let mut nu = 0.5 * (lo + hi);
    let mut resid = excess(nu)?.abs();
    for _ in 0..MAX_ITERS {
        iterations += 1;
        nu = 0.5 * (lo + hi);
        let e = excess(nu)?;
        resid = e.abs();
        if resid <= ROOT_TOL * radius.max(1.0) {
            break;
        }
        if e > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
    }
    if resid > 1e-9 * radius.max(1.0) {
        return Err(Error::Numeric(format!(
            "project_pball did not converge: residual {resid:.3e} after {iterations} iterations"
        )));
    }

    let x = point_at(nu)?;
    let residual = (norm(x.as_slice(), &pnorm) - radius).abs();
    Ok(ProjectionResult {
        x,
        lambda: nu,
        kappa: None,
        iterations,
        residual,
    })
}

/// Dispatches a mirror-space point (given as its gradient vector `g`) to the
/// Bregman projection matching the regularizer/body pairing.
///
/// Supported pairings:
/// - centered squared l2 onto a Euclidean ball (closed form),
/// - negative entropy or shifted negative entropy onto the simplex,
/// - squared p-norm onto the origin-centered p-ball with the same exponent.
pub fn bregman_project(reg: &Regularizer, body: &Body, g: &Vector) -> Result<ProjectionResult> {
    if g.dim() != body.dim() {
        return Err(Error::DimensionMismatch(format!(
            "bregman_project: body dimension {} vs gradient {}",
            body.dim(),
            g.dim()
        )));
    }
    match (reg.kind(), body) {
        (RegularizerKind::CenteredSquaredL2 { .. }, Body::PBall { p, center, radius }) => {
            if p.as_f64() != 2.0 {
                return Err(Error::InvalidInput(format!(
                    "the centered squared-l2 regularizer projects onto 2-balls only, got p = {p}"
                )));
            }
            let y = reg.gradient_inverse(g)?;
            project_ball_l2(center, *radius, &y)
        }
        (RegularizerKind::NegEntropy { .. }, Body::Simplex { .. }) => simplex_entropy_root(0.0, g),
        (RegularizerKind::ShiftedNegEntropy { shift, .. }, Body::Simplex { .. }) => {
            simplex_entropy_root(*shift, g)
        }
        (RegularizerKind::PNormSquared { p }, Body::PBall { p: bp, center, radius }) => {
            if (bp.as_f64() - *p).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "squared p-norm regularizer (p = {p}) paired with a {bp}-ball"
                )));
            }
            if center.iter().any(|c| *c != 0.0) {
                return Err(Error::InvalidInput(
                    "squared p-norm projections require an origin-centered ball".into(),
                ));
            }
            let y = reg.gradient_inverse(g)?;
            project_pball(reg, *radius, &y)
        }
        (kind, body) => Err(Error::InvalidInput(format!(
            "unsupported regularizer/body pairing: {kind:?} with {body:?}"
        ))),
    }
}

/// `||grad R(y1) - grad R(y2)||_dual - sigma ||x1 - x2||_ref` where `x_i` is
/// the Bregman projection of `y_i`; nonnegative up to roundoff.
pub fn projection_lemma_gap(
    reg: &Regularizer,
    body: &Body,
    y1: &Vector,
    y2: &Vector,
) -> Result<f64> {
    let g1 = reg.gradient(y1)?;
    let g2 = reg.gradient(y2)?;
    let x1 = bregman_project(reg, body, &g1)?.x;
    let x2 = bregman_project(reg, body, &g2)?.x;
    let grad_dist = norm(g1.sub(&g2)?.as_slice(), &reg.dual_reference());
    let point_dist = norm(x1.sub(&x2)?.as_slice(), reg.reference());
    Ok(grad_dist - reg.sigma() * point_dist)
}
