//! Request handlers. Numerical work runs on the blocking pool so long
//! integrations do not stall the accept loop.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;

use enrk_client::types::*;
use enrk_core::denominator::{parse_kind, DenominatorSpec};
use enrk_core::harness::{convergence_table, convergence_to_csv, threshold_report, DEFAULT_H_REF};
use enrk_core::integrator::integrate as run_integration;
use enrk_core::models::{model_by_name, ModelDescriptor, MODEL_NAMES};
use enrk_core::tableau::{positivity_radius, registry_get, verify_order, ButcherTableau};

use crate::{ApiError, AppState};

type Handler<T> = Result<T, ApiError>;

pub async fn health() -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
    })
}

pub async fn methods() -> Handler<Json<MethodList>> {
    let methods = enrk_core::tableau::REGISTRY_NAMES
        .iter()
        .map(|name| {
            let t = registry_get(name)?;
            Ok(MethodInfo {
                name: t.name,
                s: t.s,
                p: t.p,
            })
        })
        .collect::<Result<Vec<_>, enrk_core::Error>>()?;
    Ok(Json(MethodList { methods }))
}

pub async fn method(Path(name): Path<String>) -> Handler<Json<TableauJson>> {
    Ok(Json(registry_get(&name)?.to_json()))
}

#[derive(Debug, Deserialize)]
pub struct RadiusQuery {
    tol: Option<f64>,
}

pub async fn radius(
    Path(name): Path<String>,
    Query(query): Query<RadiusQuery>,
) -> Handler<Json<RadiusResponse>> {
    let tol = query.tol.unwrap_or(1e-9);
    if tol.is_nan() || tol <= 0.0 {
        return Err(enrk_core::Error::Precondition(format!(
            "tol must be positive, got {tol}"
        ))
        .into());
    }
    let t = registry_get(&name)?;
    let radius = positivity_radius(&t, tol);
    Ok(Json(RadiusResponse {
        name: t.name,
        radius,
        tol,
    }))
}

pub async fn order(Path(name): Path<String>) -> Handler<Json<OrderResponse>> {
    let t = registry_get(&name)?;
    let satisfied = verify_order(&t, t.p);
    let max_satisfied_order = (1..=4u32)
        .take_while(|&p| verify_order(&t, p))
        .last()
        .unwrap_or(0);
    Ok(Json(OrderResponse {
        name: t.name,
        p: t.p,
        satisfied,
        max_satisfied_order,
    }))
}

pub async fn models() -> Handler<Json<ModelList>> {
    let models = MODEL_NAMES
        .iter()
        .map(|name| {
            let m = model_by_name(name, &[])?;
            Ok(ModelInfo {
                name: m.name.clone(),
                dim: m.dim,
                params: m.params.clone(),
                default_initial: m.default_initial.clone(),
            })
        })
        .collect::<Result<Vec<_>, enrk_core::Error>>()?;
    Ok(Json(ModelList { models }))
}

pub async fn model_detail(Path(name): Path<String>) -> Handler<Json<ModelDetail>> {
    let m = model_by_name(&name, &[])?;
    let equilibria = m
        .equilibria
        .iter()
        .map(|eq| {
            let eigenvalues = enrk_core::models::jacobian_eigenvalues(&m, &eq.state)?
                .iter()
                .map(|e| EigenInfo { re: e.re, im: e.im })
                .collect();
            Ok(EquilibriumInfo {
                state: eq.state.clone(),
                stable: matches!(eq.stability, enrk_core::models::Stability::Stable),
                eigenvalues,
            })
        })
        .collect::<Result<Vec<_>, enrk_core::Error>>()?;
    Ok(Json(ModelDetail {
        name: m.name.clone(),
        dim: m.dim,
        params: m.params.clone(),
        default_initial: m.default_initial.clone(),
        alpha: m.alpha.alpha,
        linear_invariants: m.linear_invariants.clone(),
        equilibria,
        notes: m.notes.clone(),
    }))
}

fn resolve(method: &str, model: &str, params: &Option<ParamMap>) -> Result<(ButcherTableau, ModelDescriptor), enrk_core::Error> {
    let t = registry_get(method)?;
    let overrides: Vec<(String, f64)> = params
        .as_ref()
        .map(|p| p.iter().map(|(k, v)| (k.clone(), *v)).collect())
        .unwrap_or_default();
    let m = model_by_name(model, &overrides)?;
    Ok((t, m))
}

async fn run_blocking<T, F>(job: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, enrk_core::Error> + Send + 'static,
{
    tokio::task::spawn_blocking(job)
        .await
        .map_err(|e| ApiError::internal(format!("worker task failed: {e}")))?
        .map_err(ApiError::from)
}

pub async fn thresholds(
    State(_state): State<Arc<AppState>>,
    Json(req): Json<ThresholdsRequest>,
) -> Handler<Json<ThresholdReport>> {
    let report = run_blocking(move || {
        let (t, m) = resolve(&req.method, &req.model, &req.params)?;
        let m_choice = req.m.unwrap_or(2 * t.p);
        let k_choice = req.k.unwrap_or(m_choice);
        threshold_report(&t, &m, m_choice, k_choice)
    })
    .await?;
    Ok(Json(report))
}

fn csv_response(body: String) -> Response {
    ([(CONTENT_TYPE, "text/csv")], body).into_response()
}

pub async fn integrate_handler_inner(req: IntegrateRequest) -> Result<(OutputFormat, Trajectory), ApiError> {
    let format = req.format;
    let traj = run_blocking(move || {
        let (t, m) = resolve(&req.method, &req.model, &req.params)?;
        let kind = parse_kind(&req.denominator)?;
        let spec = DenominatorSpec::new(kind, t.p)?;
        let y0 = req.y0.clone().unwrap_or_else(|| m.default_initial.clone());
        if y0.len() != m.dim {
            return Err(enrk_core::Error::Precondition(format!(
                "y0 has dimension {}, model `{}` needs {}",
                y0.len(),
                m.name,
                m.dim
            )));
        }
        run_integration(&t, &spec, m.rhs().as_ref(), &y0, req.h, req.steps)
    })
    .await?;
    Ok((format, traj))
}

pub async fn integrate(
    State(_state): State<Arc<AppState>>,
    Json(req): Json<IntegrateRequest>,
) -> Handler<Response> {
    let (format, traj) = integrate_handler_inner(req).await?;
    Ok(match format {
        OutputFormat::Json => Json(traj).into_response(),
        OutputFormat::Csv => csv_response(traj.to_csv()),
    })
}

pub async fn converge(
    State(state): State<Arc<AppState>>,
    Json(req): Json<ConvergeRequest>,
) -> Handler<Response> {
    let format = req.format;
    let rows = run_blocking(move || {
        let (t, m) = resolve(&req.method, &req.model, &req.params)?;
        let specs = req
            .denominators
            .iter()
            .map(|text| DenominatorSpec::new(parse_kind(text)?, t.p))
            .collect::<Result<Vec<_>, enrk_core::Error>>()?;
        let h_ref = req.h_ref.unwrap_or(DEFAULT_H_REF);
        convergence_table(&state.cache, &t, &m, &specs, &req.hs, req.t_end, h_ref)
    })
    .await?;
    Ok(match format {
        OutputFormat::Json => Json(ConvergeResponse { rows }).into_response(),
        OutputFormat::Csv => csv_response(convergence_to_csv(&rows)),
    })
}
