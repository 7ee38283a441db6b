//! Positivity step-size threshold H = R(A,b)/alpha and the combined
//! positive-and-elementary-stable threshold tau* = min{phi*, H}.

use serde::{Deserialize, Serialize};

/// Right-hand sides f with f(y) + alpha*y >= 0 on the nonnegative orthant.
/// alpha = 0 encodes f >= 0 there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityClass {
    pub alpha: f64,
}

impl PositivityClass {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha >= 0.0, "alpha must be nonnegative");
        PositivityClass { alpha }
    }
}

/// The positivity threshold is a genuine tri-state: a number, unbounded,
/// or undefined (radius 0 — the construction says nothing). Undefined is
/// deliberately distinct from unbounded and never coerced to a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepThreshold {
    Finite(f64),
    Unbounded,
    Undefined,
}

impl StepThreshold {
    pub fn as_finite(&self) -> Option<f64> {
        match self {
            StepThreshold::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for StepThreshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepThreshold::Finite(v) => write!(f, "{v}"),
            StepThreshold::Unbounded => write!(f, "inf"),
            StepThreshold::Undefined => write!(f, "*"),
        }
    }
}

impl Serialize for StepThreshold {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            StepThreshold::Finite(v) => ser.serialize_f64(*v),
            StepThreshold::Unbounded => ser.serialize_str("inf"),
            StepThreshold::Undefined => ser.serialize_str("*"),
        }
    }
}

impl<'de> Deserialize<'de> for StepThreshold {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(StepThreshold::Finite(v)),
            Raw::Tag(s) if s == "inf" => Ok(StepThreshold::Unbounded),
            Raw::Tag(s) if s == "*" => Ok(StepThreshold::Undefined),
            Raw::Tag(s) => Err(serde::de::Error::custom(format!(
                "expected number, \"inf\" or \"*\", got \"{s}\""
            ))),
        }
    }
}

/// H = radius / alpha. Radius 0 yields Undefined; alpha = 0 (or an
/// unbounded radius) yields Unbounded.
pub fn positivity_step_threshold(radius: f64, cls: &PositivityClass) -> StepThreshold {
    if radius == 0.0 {
        StepThreshold::Undefined
    } else if cls.alpha == 0.0 || radius.is_infinite() {
        StepThreshold::Unbounded
    } else {
        StepThreshold::Finite(radius / cls.alpha)
    }
}

/// tau* = min{phi*, H}. When H is undefined the stability threshold stands
/// in and the result is flagged stability-only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PesThreshold {
    pub value: f64,
    pub stability_only: bool,
}

pub fn pes_threshold(phi_star: f64, h: StepThreshold) -> PesThreshold {
    assert!(phi_star > 0.0, "phi* must be positive");
    match h {
        StepThreshold::Finite(h) => PesThreshold {
            value: phi_star.min(h),
            stability_only: false,
        },
        StepThreshold::Unbounded => PesThreshold {
            value: phi_star,
            stability_only: false,
        },
        StepThreshold::Undefined => PesThreshold {
            value: phi_star,
            stability_only: true,
        },
    }
}
