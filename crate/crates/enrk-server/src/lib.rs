//! Axum service exposing tableau inspection, threshold reports, ENRK
//! integration and convergence studies over HTTP/JSON.

mod routes;

use std::sync::Arc;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use enrk_client::types::{ApiErrorBody, ApiErrorEnvelope, ApiErrorKind};
use enrk_core::harness::ReferenceCache;
use enrk_core::ErrorKind;

/// Shared service state: the reference-trajectory cache survives across
/// requests so repeated convergence studies reuse the expensive runs.
#[derive(Default)]
pub struct AppState {
    pub cache: ReferenceCache,
}

pub fn app() -> Router {
    app_with_state(Arc::new(AppState::default()))
}

pub fn app_with_state(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(routes::health))
        .route("/v1/methods", get(routes::methods))
        .route("/v1/methods/{name}", get(routes::method))
        .route("/v1/methods/{name}/radius", get(routes::radius))
        .route("/v1/methods/{name}/order", get(routes::order))
        .route("/v1/models", get(routes::models))
        .route("/v1/models/{name}", get(routes::model_detail))
        .route("/v1/thresholds", post(routes::thresholds))
        .route("/v1/integrate", post(routes::integrate))
        .route("/v1/converge", post(routes::converge))
        .fallback(unknown_route)
        .with_state(state)
}

async fn unknown_route(uri: axum::http::Uri) -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        body: ApiErrorBody {
            kind: ApiErrorKind::NotFound,
            message: format!("no such endpoint: {uri}"),
        },
    }
}

pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, app()).await
}

/// Error payload carried by every non-200 response.
pub struct ApiError {
    pub status: StatusCode,
    pub body: ApiErrorBody,
}

impl ApiError {
    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ApiErrorBody {
                kind: ApiErrorKind::Internal,
                message: message.into(),
            },
        }
    }
}

impl From<enrk_core::Error> for ApiError {
    fn from(err: enrk_core::Error) -> Self {
        let (status, kind) = match &err {
            enrk_core::Error::UnknownMethod { .. } | enrk_core::Error::UnknownModel { .. } => {
                (StatusCode::NOT_FOUND, ApiErrorKind::NotFound)
            }
            _ => match err.kind() {
                ErrorKind::Divergence => {
                    (StatusCode::UNPROCESSABLE_ENTITY, ApiErrorKind::Divergence)
                }
                ErrorKind::Precondition => (StatusCode::BAD_REQUEST, ApiErrorKind::Precondition),
            },
        };
        ApiError {
            status,
            body: ApiErrorBody {
                kind,
                message: err.to_string(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ApiErrorEnvelope { error: self.body })).into_response()
    }
}
