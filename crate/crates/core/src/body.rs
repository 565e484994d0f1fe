//! Feasible bodies: the probability simplex and p-norm balls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::{norm, NormSpec};
use crate::vector::Vector;

/// A convex feasible set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    /// `{ x : sum x_i = 1, x_i >= 0 }`.
    Simplex { dim: usize },
    /// `{ x : ||x - center||_p <= radius }`.
    PBall {
        p: NormSpec,
        center: Vector,
        radius: f64,
    },
}

impl Body {
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("simplex: dimension must be >= 1".into()));
        }
        Ok(Body::Simplex { dim })
    }

    pub fn p_ball(p: NormSpec, center: Vector, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "p_ball: radius must be finite and > 0, got {radius}"
            )));
        }
        Ok(Body::PBall { p, center, radius })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        match self {
            Body::Simplex { dim } => *dim,
            Body::PBall { center, .. } => center.dim(),
        }
    }

    /// Amount by which `x` violates the body's constraints; `0` when feasible.
    pub fn feasibility_residual(&self, x: &Vector) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "feasibility_residual: body dimension {} vs point {}",
                self.dim(),
                x.dim()
            )));
        }
        match self {
            Body::Simplex { .. } => {
                let sum: f64 = x.iter().sum();
                let neg = x.iter().fold(0.0_f64, |m, v| m.max(-v));
                Ok((sum - 1.0).abs().max(neg))
            }
            Body::PBall { p, center, radius } => {
                let d = x.sub(center)?;
                Ok((norm(d.as_slice(), p) - radius).max(0.0))
            }
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.feasibility_residual(x)? <= tol)
    }

    /// Canonical interior-ish start point: uniform on the simplex, the
    /// center of a ball.
    pub fn default_start(&self) -> Result<Vector> {
        match self {
            Body::Simplex { dim } => Vector::constant(*dim, 1.0 / *dim as f64),
            Body::PBall { center, .. } => Ok(center.clone()),
        }
    }

    /// Whether every feasible point has nonnegative coordinates.
    /// For a p-ball this holds exactly when `min_i center_i >= radius`
    /// (the ball extends `radius` along each axis).
    #[must_use]
    pub fn in_nonneg_orthant(&self) -> bool {
        match self {
            Body::Simplex { .. } => true,
            Body::PBall { center, radius, .. } => {
                center.iter().all(|k| *k >= *radius)
            }
        }
    }

    /// Smallest coordinate of the ball center; `None` for the simplex.
    #[must_use]
    pub fn center_min(&self) -> Option<f64> {
        match self {
            Body::Simplex { .. } => None,
            Body::PBall { center, .. } => center.iter().copied().fold(None, |m, v| {
                Some(match m {
                    None => v,
                    Some(m) => m.min(v),
                })
            }),
        }
    }
}
