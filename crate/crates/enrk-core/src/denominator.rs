//! Denominator functions phi(h): the standard h, the bounded family
//! phi1, the order-preserving family phi2, and the blend phi3, together
//! with the parameter rules that keep them below a PES threshold.

use std::fmt;

use crate::error::{Error, Result};

/// Which denominator family, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenominatorKind {
    /// phi(h) = h.
    Standard,
    /// phi1(h) = (1 - e^{-tau1 h}) / tau1, bounded by 1/tau1.
    Phi1 { tau1: f64 },
    /// phi2(h) = h e^{-tau2 h^m}, order-preserving for m >= p.
    Phi2 { tau2: f64, m: u32 },
    /// phi3(h) = theta(h) phi2(h) + (1 - theta(h)) phi1(h),
    /// theta(h) = e^{-h^k}.
    Phi3 { tau1: f64, tau2: f64, m: u32, k: u32 },
}

impl fmt::Display for DenominatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenominatorKind::Standard => write!(f, "h"),
            DenominatorKind::Phi1 { tau1 } => write!(f, "phi1(tau1={tau1})"),
            DenominatorKind::Phi2 { tau2, m } => write!(f, "phi2(tau2={tau2},m={m})"),
            DenominatorKind::Phi3 { tau1, tau2, m, k } => {
                write!(f, "phi3(tau1={tau1},tau2={tau2},m={m},k={k})")
            }
        }
    }
}

/// A denominator choice checked against the order it is meant to preserve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenominatorSpec {
    pub kind: DenominatorKind,
    pub p_target: u32,
}

impl DenominatorSpec {
    /// Validates the structural constraints: positive parameters, and
    /// m >= p, k >= p where the families require them.
    pub fn new(kind: DenominatorKind, p_target: u32) -> Result<Self> {
        if p_target == 0 {
            return Err(Error::Domain("p_target must be at least 1".into()));
        }
        match kind {
            DenominatorKind::Standard => {}
            DenominatorKind::Phi1 { tau1 } => {
                if tau1 <= 0.0 {
                    return Err(Error::Domain(format!("tau1 must be positive, got {tau1}")));
                }
            }
            DenominatorKind::Phi2 { tau2, m } => {
                if tau2 <= 0.0 {
                    return Err(Error::Domain(format!("tau2 must be positive, got {tau2}")));
                }
                if m < p_target {
                    return Err(Error::Domain(format!(
                        "phi2 requires m >= p ({m} < {p_target})"
                    )));
                }
            }
            DenominatorKind::Phi3 { tau1, tau2, m, k } => {
                if tau1 <= 0.0 || tau2 <= 0.0 {
                    return Err(Error::Domain(
                        "phi3 requires positive tau1 and tau2".into(),
                    ));
                }
                if m < p_target {
                    return Err(Error::Domain(format!(
                        "phi3 requires m >= p ({m} < {p_target})"
                    )));
                }
                if k < p_target {
                    return Err(Error::Domain(format!(
                        "phi3 requires k >= p ({k} < {p_target})"
                    )));
                }
            }
        }
        Ok(DenominatorSpec { kind, p_target })
    }

    pub fn standard(p_target: u32) -> Self {
        DenominatorSpec {
            kind: DenominatorKind::Standard,
            p_target,
        }
    }

    /// phi(h) for h > 0; strictly positive for every family.
    pub fn eval(&self, h: f64) -> Result<f64> {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::Domain(format!("step size must be positive, got {h}")));
        }
        Ok(eval_kind(&self.kind, h))
    }
}

fn phi1(h: f64, tau1: f64) -> f64 {
    (-(-tau1 * h).exp_m1()) / tau1
}

fn phi2(h: f64, tau2: f64, m: u32) -> f64 {
    h * (-tau2 * h.powi(m as i32)).exp()
}

fn eval_kind(kind: &DenominatorKind, h: f64) -> f64 {
    match *kind {
        DenominatorKind::Standard => h,
        DenominatorKind::Phi1 { tau1 } => phi1(h, tau1),
        DenominatorKind::Phi2 { tau2, m } => phi2(h, tau2, m),
        DenominatorKind::Phi3 { tau1, tau2, m, k } => {
            let theta = (-h.powi(k as i32)).exp();
            theta * phi2(h, tau2, m) + (1.0 - theta) * phi1(h, tau1)
        }
    }
}

/// tau1 must exceed 1/tau* for phi1 to stay below tau*.
pub fn tau1_opt(tau_star: f64) -> f64 {
    assert!(
        tau_star > 0.0 && tau_star.is_finite(),
        "tau* must be positive and finite"
    );
    1.0 / tau_star
}

/// tau2 must exceed 1/(m e tau*^m) for phi2 to stay below tau*.
pub fn tau2_opt(tau_star: f64, m: u32) -> f64 {
    assert!(
        tau_star > 0.0 && tau_star.is_finite(),
        "tau* must be positive and finite"
    );
    assert!(m >= 1);
    1.0 / (m as f64 * std::f64::consts::E * tau_star.powi(m as i32))
}

/// Margin applied on top of tau_opt when parameters are auto-selected,
/// realizing the strict inequalities.
pub const AUTO_MARGIN: f64 = 1e-3;

pub fn auto_tau1(tau_star: f64) -> f64 {
    tau1_opt(tau_star) * (1.0 + AUTO_MARGIN)
}

pub fn auto_tau2(tau_star: f64, m: u32) -> f64 {
    tau2_opt(tau_star, m) * (1.0 + AUTO_MARGIN)
}

/// Outcome of checking a spec against a threshold: the analytic bound on
/// sup phi, whether it stays below tau*, and whether the family preserves
/// the target order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub sup: f64,
    pub bounded: bool,
    pub order_preserving: bool,
}

/// Boundedness uses the analytic suprema (1/tau1 for phi1, the interior
/// maximum for phi2, the max of the two as a bound for phi3). Order
/// preservation: standard and phi2/phi3 with m,k >= p hold, phi1 does not.
pub fn validate(spec: &DenominatorSpec, tau_star: f64) -> ValidationReport {
    assert!(tau_star > 0.0, "tau* must be positive");
    let sup = match spec.kind {
        DenominatorKind::Standard => f64::INFINITY,
        DenominatorKind::Phi1 { tau1 } => 1.0 / tau1,
        DenominatorKind::Phi2 { tau2, m } => phi2_sup(tau2, m),
        DenominatorKind::Phi3 { tau1, tau2, m, .. } => (1.0 / tau1).max(phi2_sup(tau2, m)),
    };
    let order_preserving = match spec.kind {
        DenominatorKind::Standard => true,
        DenominatorKind::Phi1 { .. } => false,
        DenominatorKind::Phi2 { .. } | DenominatorKind::Phi3 { .. } => true,
    };
    ValidationReport {
        sup,
        bounded: sup < tau_star,
        order_preserving,
    }
}

/// Maximum of h e^{-tau2 h^m}, attained at h = (1/(m tau2))^{1/m}.
fn phi2_sup(tau2: f64, m: u32) -> f64 {
    let h_star = (1.0 / (m as f64 * tau2)).powf(1.0 / m as f64);
    (-1.0 / m as f64).exp() * h_star
}

/// Parses the compact spec format: "h", "phi1(tau1=...)",
/// "phi2(tau2=...,m=...)", "phi3(tau1=...,tau2=...,m=...,k=...)".
pub fn parse_kind(text: &str) -> Result<DenominatorKind> {
    let text = text.trim();
    if text == "h" || text == "standard" {
        return Ok(DenominatorKind::Standard);
    }
    let (name, rest) = text
        .split_once('(')
        .ok_or_else(|| Error::Precondition(format!("malformed denominator spec `{text}`")))?;
    let body = rest
        .strip_suffix(')')
        .ok_or_else(|| Error::Precondition(format!("missing `)` in `{text}`")))?;
    let mut fields = std::collections::HashMap::new();
    for part in body.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Precondition(format!("expected key=value, got `{part}`")))?;
        fields.insert(key.trim().to_string(), value.trim().to_string());
    }
    let take_f64 = |fields: &std::collections::HashMap<String, String>, key: &str| -> Result<f64> {
        fields
            .get(key)
            .ok_or_else(|| Error::Precondition(format!("`{name}` requires `{key}`")))?
            .parse::<f64>()
            .map_err(|e| Error::Precondition(format!("bad `{key}`: {e}")))
    };
    let take_u32 = |fields: &std::collections::HashMap<String, String>, key: &str| -> Result<u32> {
        fields
            .get(key)
            .ok_or_else(|| Error::Precondition(format!("`{name}` requires `{key}`")))?
            .parse::<u32>()
            .map_err(|e| Error::Precondition(format!("bad `{key}`: {e}")))
    };
    let expect_keys = |fields: &std::collections::HashMap<String, String>,
                       keys: &[&str]|
     -> Result<()> {
        for key in fields.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(Error::Precondition(format!(
                    "unexpected field `{key}` in `{name}(...)`"
                )));
            }
        }
        Ok(())
    };
    match name {
        "phi1" => {
            expect_keys(&fields, &["tau1"])?;
            Ok(DenominatorKind::Phi1 {
                tau1: take_f64(&fields, "tau1")?,
            })
        }
        "phi2" => {
            expect_keys(&fields, &["tau2", "m"])?;
            Ok(DenominatorKind::Phi2 {
                tau2: take_f64(&fields, "tau2")?,
                m: take_u32(&fields, "m")?,
            })
        }
        "phi3" => {
            expect_keys(&fields, &["tau1", "tau2", "m", "k"])?;
            Ok(DenominatorKind::Phi3 {
                tau1: take_f64(&fields, "tau1")?,
                tau2: take_f64(&fields, "tau2")?,
                m: take_u32(&fields, "m")?,
                k: take_u32(&fields, "k")?,
            })
        }
        other => Err(Error::Precondition(format!(
            "unknown denominator family `{other}`; expected h, phi1, phi2 or phi3"
        ))),
    }
}
