//! Finite, non-empty `f64` vectors with checked arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A contiguous buffer of `f64` with dimension `n >= 1` and every entry
/// finite. Construction enforces the invariant; all arithmetic helpers
/// re-validate the result so non-finite values never propagate silently.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Validates user-supplied data.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("vector must have dimension >= 1".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "vector entries must be finite, got {bad}"
            )));
        }
        Ok(Vector(values))
    }

    /// Validates the result of an internal computation; a non-finite entry
    /// is reported as a numeric failure tagged with `context`.
    pub fn computed(values: Vec<f64>, context: &str) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Numeric(format!("{context}: empty result")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "{context}: produced a non-finite entry"
            )));
        }
        Ok(Vector(values))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim.max(0)])
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    /// Standard basis vector `e_i`.
    pub fn unit(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::InvalidInput(format!(
                "unit vector index {i} out of range for dimension {dim}"
            )));
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self::new(v)
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[must_use]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[must_use]
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn check_same_dim(&self, other: &Vector, what: &str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        self.check_same_dim(other, "dot")?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &Vector) -> Result<Vector> {
        self.check_same_dim(other, "add_scaled")?;
        let out: Vec<f64> = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a + scale * b)
            .collect();
        Vector::computed(out, "add_scaled")
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.add_scaled(-1.0, other)
    }

    pub fn scale(&self, scale: f64) -> Result<Vector> {
        let out: Vec<f64> = self.0.iter().map(|a| a * scale).collect();
        Vector::computed(out, "scale")
    }
}

impl std::ops::Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(deserializer)?;
        Vector::new(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn arithmetic_checks_dims() {
        let a = Vector::new(vec![1.0, 2.0]).unwrap();
        let b = Vector::new(vec![3.0]).unwrap();
        assert!(a.dot(&b).is_err());
        assert!(a.sub(&b).is_err());
    }

    #[test]
    fn add_scaled_and_dot_match_hand_values() {
        let a = Vector::new(vec![1.0, 2.0]).unwrap();
        let b = Vector::new(vec![3.0, -1.0]).unwrap();
        assert_eq!(a.dot(&b).unwrap(), 1.0);
        let c = a.add_scaled(2.0, &b).unwrap();
        assert_eq!(c.as_slice(), &[7.0, 0.0]);
    }

    #[test]
    fn serde_rejects_bad_payload() {
        let ok: Vector = serde_json::from_str("[1.0, 2.0]").unwrap();
        assert_eq!(ok.dim(), 2);
        assert!(serde_json::from_str::<Vector>("[]").is_err());
    }
}
