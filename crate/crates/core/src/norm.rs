//! Norm exponents, norms, dual exponents, and the Hoelder gap.
//!
//! An exponent is a value `p` in `[1, inf]`; the dual exponent `q` satisfies
//! `1/p + 1/q = 1` with the conventions `dual(1) = inf` and `dual(inf) = 1`.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A norm exponent in `[1, inf]`, with infinity as a distinguished value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormSpec {
    Finite(f64),
    Infinity,
}

impl NormSpec {
    /// Validated constructor for a finite exponent `p >= 1`.
    pub fn finite(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidInput(format!(
                "norm exponent must be finite and >= 1, got {p}"
            )));
        }
        Ok(NormSpec::Finite(p))
    }

    /// Maps `f64::INFINITY` to `Infinity`, any other value through `finite`.
    pub fn from_f64(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(NormSpec::Infinity)
        } else {
            Self::finite(p)
        }
    }

    /// The exponent as an `f64`, with `Infinity` mapped to `f64::INFINITY`.
    #[must_use]
    pub fn as_f64(&self) -> f64 {
        match self {
            NormSpec::Finite(p) => *p,
            NormSpec::Infinity => f64::INFINITY,
        }
    }

    #[must_use]
    pub fn is_infinite(&self) -> bool {
        matches!(self, NormSpec::Infinity)
    }
}

impl std::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormSpec::Finite(p) => write!(f, "{p}"),
            NormSpec::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for NormSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormSpec::Finite(p) => serializer.serialize_f64(*p),
            NormSpec::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct NormSpecVisitor;

        impl<'de> Visitor<'de> for NormSpecVisitor {
            type Value = NormSpec;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a number >= 1 or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<NormSpec, E> {
                NormSpec::from_f64(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<NormSpec, E> {
                NormSpec::from_f64(v as f64).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<NormSpec, E> {
                NormSpec::from_f64(v as f64).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<NormSpec, E> {
                match v {
                    "inf" | "Inf" | "INF" | "infinity" => Ok(NormSpec::Infinity),
                    other => other
                        .parse::<f64>()
                        .map_err(E::custom)
                        .and_then(|p| NormSpec::from_f64(p).map_err(E::custom)),
                }
            }
        }

        deserializer.deserialize_any(NormSpecVisitor)
    }
}

/// The `l_p` norm of a slice. Total on finite inputs for every valid `p`.
#[must_use]
pub fn norm(x: &[f64], p: &NormSpec) -> f64 {
    match p {
        NormSpec::Infinity => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        NormSpec::Finite(p) if *p == 1.0 => x.iter().map(|v| v.abs()).sum(),
        NormSpec::Finite(p) if *p == 2.0 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormSpec::Finite(p) => {
            // Scale by the max entry so that |x_i|^p cannot overflow.
            let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            let sum: f64 = x.iter().map(|v| (v.abs() / scale).powf(*p)).sum();
            scale * sum.powf(1.0 / *p)
        }
    }
}

/// The exponent `q` with `1/p + 1/q = 1`; `dual(1) = inf`, `dual(inf) = 1`.
#[must_use]
pub fn dual_exponent(p: &NormSpec) -> NormSpec {
    match p {
        NormSpec::Infinity => NormSpec::Finite(1.0),
        NormSpec::Finite(p) if *p == 1.0 => NormSpec::Infinity,
        NormSpec::Finite(p) => NormSpec::Finite(*p / (*p - 1.0)),
    }
}

/// `||x||_p * ||y||_q - x . y` with `q` dual to `p`; nonnegative by
/// Hoelder's inequality.
pub fn holder_gap(x: &[f64], y: &[f64], p: &NormSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "holder_gap: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let q = dual_exponent(p);
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(norm(x, p) * norm(y, &q) - dot)
}
