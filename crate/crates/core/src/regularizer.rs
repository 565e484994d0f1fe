//! Mirror maps: value, gradient, inverse gradient, Bregman divergence, and
//! the strong-convexity probes used by the verification layers.
//!
//! Four regularizers are supported:
//!
//! ```text
//! centered squared l2   R(x) = (1/2)||x - k||_2^2      sigma = 1      ref p = 2
//! negative entropy      R(x) = sum x_i ln x_i           sigma = 1      ref p = 1
//! shifted neg. entropy  R(x) = sum (x_i+t) ln (x_i+t)   sigma = 1/(1+n t)  ref p = 1
//! squared p-norm        R(x) = (1/2)||x||_p^2           sigma = p - 1  ref p
//! ```
//!
//! The entropy constants hold on the probability simplex (l1 ball of mass 1);
//! the squared p-norm constant holds for p in (1, 2].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::{dual_exponent, norm, NormSpec};
use crate::vector::Vector;

/// The regularizer family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegularizerKind {
    CenteredSquaredL2 { center: Vector },
    NegEntropy { dim: usize },
    ShiftedNegEntropy { shift: f64, dim: usize },
    PNormSquared { p: f64 },
}

/// A mirror map with its strong-convexity constant and reference norm.
///
/// `sigma` and `reference` are derived from the kind at construction and are
/// kept consistent by the `TryFrom` serde path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegularizerKind", into = "RegularizerKind")]
pub struct Regularizer {
    kind: RegularizerKind,
    sigma: f64,
    reference: NormSpec,
}

impl TryFrom<RegularizerKind> for Regularizer {
    type Error = Error;

    fn try_from(kind: RegularizerKind) -> Result<Self> {
        match kind {
            RegularizerKind::CenteredSquaredL2 { center } => {
                Ok(Regularizer::centered_squared_l2(center))
            }
            RegularizerKind::NegEntropy { dim } => Regularizer::neg_entropy(dim),
            RegularizerKind::ShiftedNegEntropy { shift, dim } => {
                Regularizer::shifted_neg_entropy(shift, dim)
            }
            RegularizerKind::PNormSquared { p } => Regularizer::p_norm_squared(p),
        }
    }
}

impl From<Regularizer> for RegularizerKind {
    fn from(reg: Regularizer) -> Self {
        reg.kind
    }
}

impl Regularizer {
    pub fn centered_squared_l2(center: Vector) -> Self {
        Regularizer {
            kind: RegularizerKind::CenteredSquaredL2 { center },
            sigma: 1.0,
            reference: NormSpec::Finite(2.0),
        }
    }

    pub fn neg_entropy(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("neg_entropy: dimension must be >= 1".into()));
        }
        Ok(Regularizer {
            kind: RegularizerKind::NegEntropy { dim },
            sigma: 1.0,
            reference: NormSpec::Finite(1.0),
        })
    }

    pub fn shifted_neg_entropy(shift: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "shifted_neg_entropy: dimension must be >= 1".into(),
            ));
        }
        if !shift.is_finite() || shift <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "shifted_neg_entropy: shift must be finite and > 0, got {shift}"
            )));
        }
        Ok(Regularizer {
            kind: RegularizerKind::ShiftedNegEntropy { shift, dim },
            sigma: 1.0 / (1.0 + dim as f64 * shift),
            reference: NormSpec::Finite(1.0),
        })
    }

    pub fn p_norm_squared(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 || p > 2.0 {
            return Err(Error::InvalidInput(format!(
                "p_norm_squared: exponent must lie in (1, 2], got {p}"
            )));
        }
        Ok(Regularizer {
            kind: RegularizerKind::PNormSquared { p },
            sigma: p - 1.0,
            reference: NormSpec::Finite(p),
        })
    }

    #[must_use]
    pub fn kind(&self) -> &RegularizerKind {
        &self.kind
    }

    /// Strong-convexity constant with respect to the reference norm.
    #[must_use]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The norm the strong-convexity constant refers to.
    #[must_use]
    pub fn reference(&self) -> &NormSpec {
        &self.reference
    }

    /// Dual of the reference norm; gradients live in this norm's space.
    #[must_use]
    pub fn dual_reference(&self) -> NormSpec {
        dual_exponent(&self.reference)
    }

    /// Dimension the regularizer is committed to, when it is.
    #[must_use]
    pub fn expected_dim(&self) -> Option<usize> {
        match &self.kind {
            RegularizerKind::CenteredSquaredL2 { center } => Some(center.dim()),
            RegularizerKind::NegEntropy { dim } => Some(*dim),
            RegularizerKind::ShiftedNegEntropy { dim, .. } => Some(*dim),
            RegularizerKind::PNormSquared { .. } => None,
        }
    }

    fn check_dim(&self, x: &Vector, what: &str) -> Result<()> {
        if let Some(dim) = self.expected_dim() {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "{what}: regularizer expects dimension {dim}, got {}",
                    x.dim()
                )));
            }
        }
        Ok(())
    }

    /// `R(x)`. Entropy variants accept boundary points with the convention
    /// `0 ln 0 = 0`; coordinates below the domain floor are domain errors.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x, "value")?;
        match &self.kind {
            RegularizerKind::CenteredSquaredL2 { center } => {
                let d = x.sub(center)?;
                Ok(0.5 * d.iter().map(|v| v * v).sum::<f64>())
            }
            RegularizerKind::NegEntropy { .. } => xlnx_sum(x.as_slice(), 0.0),
            RegularizerKind::ShiftedNegEntropy { shift, .. } => xlnx_sum(x.as_slice(), *shift),
            RegularizerKind::PNormSquared { p } => {
                let n = norm(x.as_slice(), &NormSpec::Finite(*p));
                Ok(0.5 * n * n)
            }
        }
    }

    /// `grad R(x)`. Entropy variants require every coordinate strictly above
    /// the domain floor; the gradient is never silently infinite.
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x, "gradient")?;
        match &self.kind {
            RegularizerKind::CenteredSquaredL2 { center } => x.sub(center),
            RegularizerKind::NegEntropy { .. } => entropy_gradient(x.as_slice(), 0.0),
            RegularizerKind::ShiftedNegEntropy { shift, .. } => {
                entropy_gradient(x.as_slice(), *shift)
            }
            RegularizerKind::PNormSquared { p } => p_norm_gradient(x.as_slice(), *p),
        }
    }

    /// The point `y` with `gradient(y) = g`.
    ///
    /// For the squared p-norm this is the dual map, the gradient of the
    /// squared q-norm at `g` (exact inverse by Fenchel conjugacy); `g = 0`
    /// maps to the origin.
    pub fn gradient_inverse(&self, g: &Vector) -> Result<Vector> {
        self.check_dim(g, "gradient_inverse")?;
        match &self.kind {
            RegularizerKind::CenteredSquaredL2 { center } => g.add_scaled(1.0, center),
            RegularizerKind::NegEntropy { .. } => {
                let out: Vec<f64> = g.iter().map(|gi| (gi - 1.0).exp()).collect();
                Vector::computed(out, "neg_entropy gradient_inverse")
            }
            RegularizerKind::ShiftedNegEntropy { shift, .. } => {
                let out: Vec<f64> = g.iter().map(|gi| (gi - 1.0).exp() - shift).collect();
                Vector::computed(out, "shifted_neg_entropy gradient_inverse")
            }
            RegularizerKind::PNormSquared { p } => {
                let q = *p / (*p - 1.0);
                p_norm_gradient(g.as_slice(), q)
            }
        }
    }

    /// `B_R(x, y) = R(x) - R(y) - grad R(y) . (x - y)`; `y` must admit a
    /// gradient, `x` only a value.
    pub fn bregman(&self, x: &Vector, y: &Vector) -> Result<f64> {
        x.check_same_dim(y, "bregman")?;
        let gy = self.gradient(y)?;
        let diff = x.sub(y)?;
        Ok(self.value(x)? - self.value(y)? - gy.dot(&diff)?)
    }

    /// Absolute residual of the three-point identity
    /// `[grad R(a) - grad R(b)] . (c - b) = B(b,a) - B(c,a) + B(c,b)`.
    pub fn three_point_residual(&self, a: &Vector, b: &Vector, c: &Vector) -> Result<f64> {
        let ga = self.gradient(a)?;
        let gb = self.gradient(b)?;
        let lhs = ga.sub(&gb)?.dot(&c.sub(b)?)?;
        let rhs = self.bregman(b, a)? - self.bregman(c, a)? + self.bregman(c, b)?;
        Ok((lhs - rhs).abs())
    }

    /// `B_R(x,y) - (sigma/2) ||x - y||_ref^2`; nonnegative on the domain the
    /// strong-convexity constant is stated for.
    pub fn strong_convexity_gap(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let d = x.sub(y)?;
        let n = norm(d.as_slice(), &self.reference);
        Ok(self.bregman(x, y)? - 0.5 * self.sigma * n * n)
    }
}

fn xlnx_sum(x: &[f64], shift: f64) -> Result<f64> {
    let mut total = 0.0;
    for (i, xi) in x.iter().enumerate() {
        let v = xi + shift;
        if v < 0.0 {
            return Err(Error::Domain(format!(
                "entropy value: coordinate {i} is {xi}, below the domain floor {}",
                -shift
            )));
        }
        if v > 0.0 {
            total += v * v.ln();
        }
        // v == 0 contributes 0 by the x ln x limit convention.
    }
    Ok(total)
}

fn entropy_gradient(x: &[f64], shift: f64) -> Result<Vector> {
    let mut out = Vec::with_capacity(x.len());
    for (i, xi) in x.iter().enumerate() {
        let v = xi + shift;
        if v <= 0.0 {
            return Err(Error::Domain(format!(
                "entropy gradient: coordinate {i} is {xi}, at or below the domain floor {}",
                -shift
            )));
        }
        out.push(v.ln() + 1.0);
    }
    Vector::computed(out, "entropy gradient")
}

/// Gradient of `(1/2)||x||_p^2`: `sign(x_i) |x_i|^(p-1) ||x||_p^(2-p)`.
/// One-homogeneous in `x`; zero at the origin for p < 2 and exactly `x`
/// for p = 2.
fn p_norm_gradient(x: &[f64], p: f64) -> Result<Vector> {
    let xnorm = norm(x, &NormSpec::Finite(p));
    if xnorm == 0.0 {
        return Vector::computed(vec![0.0; x.len()], "p_norm gradient");
    }
    let out: Vec<f64> = x
        .iter()
        .map(|xi| {
            if *xi == 0.0 {
                0.0
            } else {
                // Work with the normalized coordinate to avoid overflow for
                // exponents below 1 applied to large magnitudes.
                xi.signum() * (xi.abs() / xnorm).powf(p - 1.0) * xnorm
            }
        })
        .collect();
    Vector::computed(out, "p_norm gradient")
}
