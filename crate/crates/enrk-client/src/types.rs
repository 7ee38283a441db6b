//! Wire types shared by the service and its clients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use enrk_core::harness::{ConvergenceCell, ConvergenceRow, ThresholdReport};
pub use enrk_core::integrator::Trajectory;
pub use enrk_core::tableau::TableauJson;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodInfo {
    pub name: String,
    pub s: usize,
    pub p: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodList {
    pub methods: Vec<MethodInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusResponse {
    pub name: String,
    pub radius: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderResponse {
    pub name: String,
    /// Claimed classical order.
    pub p: u32,
    /// Whether the order conditions up to `p` hold.
    pub satisfied: bool,
    /// Largest order in 1..=4 whose conditions all hold.
    pub max_satisfied_order: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub dim: usize,
    pub params: Vec<(String, f64)>,
    pub default_initial: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelList {
    pub models: Vec<ModelInfo>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigenInfo {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumInfo {
    pub state: Vec<f64>,
    pub stable: bool,
    pub eigenvalues: Vec<EigenInfo>,
}

/// Full description of a bundled model: parameters, invariants, and the
/// located equilibria with their spectra.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDetail {
    pub name: String,
    pub dim: usize,
    pub params: Vec<(String, f64)>,
    pub default_initial: Vec<f64>,
    pub alpha: f64,
    pub linear_invariants: Vec<(Vec<f64>, f64)>,
    pub equilibria: Vec<EquilibriumInfo>,
    pub notes: Vec<String>,
}

/// Parameter overrides applied to a model's named constants.
pub type ParamMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdsRequest {
    pub method: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamMap>,
    /// Exponent for the phi2/phi3 recommendations; defaults to 2p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    /// Blend exponent for phi3; defaults to m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrateRequest {
    pub method: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamMap>,
    /// Denominator spec in the compact format, e.g. "phi2(tau2=0.095,m=4)".
    pub denominator: String,
    pub h: f64,
    pub steps: usize,
    /// Initial state; the model default when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergeRequest {
    pub method: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamMap>,
    pub denominators: Vec<String>,
    /// Strictly decreasing step sizes.
    pub hs: Vec<f64>,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_ref: Option<f64>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergeResponse {
    pub rows: Vec<ConvergenceRow>,
}

/// Machine-readable error category carried in every error payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiErrorKind {
    NotFound,
    Precondition,
    Divergence,
    Internal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub kind: ApiErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiErrorEnvelope {
    pub error: ApiErrorBody,
}
