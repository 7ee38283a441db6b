//! Thin HTTP client for the enrk service. All numerical work happens
//! server-side; this crate only moves typed requests and responses.

pub mod types;

use reqwest::StatusCode;
use thiserror::Error;

use types::*;

#[derive(Debug, Error)]
pub enum ClientError {
    /// The service rejected the request and said why.
    #[error("{kind:?}: {message}")]
    Api {
        kind: ApiErrorKind,
        message: String,
        status: u16,
    },
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
}

impl ClientError {
    pub fn api_kind(&self) -> Option<ApiErrorKind> {
        match self {
            ClientError::Api { kind, .. } => Some(*kind),
            ClientError::Transport(_) => None,
        }
    }
}

pub type ClientResult<T> = Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        let mut base = base_url.into();
        while base.ends_with('/') {
            base.pop();
        }
        Client {
            base,
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn decode_error(resp: reqwest::Response) -> ClientError {
        let status = resp.status().as_u16();
        match resp.json::<ApiErrorEnvelope>().await {
            Ok(envelope) => ClientError::Api {
                kind: envelope.error.kind,
                message: envelope.error.message,
                status,
            },
            Err(e) => ClientError::Api {
                kind: ApiErrorKind::Internal,
                message: format!("undecodable error body (status {status}): {e}"),
                status,
            },
        }
    }

    async fn get_json<T: serde::de::DeserializeOwned>(&self, path: &str) -> ClientResult<T> {
        let resp = self.http.get(format!("{}{path}", self.base)).send().await?;
        if resp.status() != StatusCode::OK {
            return Err(Self::decode_error(resp).await);
        }
        Ok(resp.json().await?)
    }

    async fn post<B: serde::Serialize>(
        &self,
        path: &str,
        body: &B,
    ) -> ClientResult<reqwest::Response> {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .json(body)
            .send()
            .await?;
        if resp.status() != StatusCode::OK {
            return Err(Self::decode_error(resp).await);
        }
        Ok(resp)
    }

    pub async fn health(&self) -> ClientResult<HealthResponse> {
        self.get_json("/health").await
    }

    pub async fn methods(&self) -> ClientResult<MethodList> {
        self.get_json("/v1/methods").await
    }

    pub async fn method(&self, name: &str) -> ClientResult<TableauJson> {
        self.get_json(&format!("/v1/methods/{name}")).await
    }

    pub async fn radius(&self, name: &str, tol: Option<f64>) -> ClientResult<RadiusResponse> {
        let query = tol.map(|t| format!("?tol={t}")).unwrap_or_default();
        self.get_json(&format!("/v1/methods/{name}/radius{query}"))
            .await
    }

    pub async fn order(&self, name: &str) -> ClientResult<OrderResponse> {
        self.get_json(&format!("/v1/methods/{name}/order")).await
    }

    pub async fn models(&self) -> ClientResult<ModelList> {
        self.get_json("/v1/models").await
    }

    pub async fn model_detail(&self, name: &str) -> ClientResult<ModelDetail> {
        self.get_json(&format!("/v1/models/{name}")).await
    }

    pub async fn thresholds(&self, req: &ThresholdsRequest) -> ClientResult<ThresholdReport> {
        Ok(self.post("/v1/thresholds", req).await?.json().await?)
    }

    pub async fn integrate(&self, req: &IntegrateRequest) -> ClientResult<Trajectory> {
        let mut req = req.clone();
        req.format = OutputFormat::Json;
        Ok(self.post("/v1/integrate", &req).await?.json().await?)
    }

    pub async fn integrate_csv(&self, req: &IntegrateRequest) -> ClientResult<String> {
        let mut req = req.clone();
        req.format = OutputFormat::Csv;
        Ok(self.post("/v1/integrate", &req).await?.text().await?)
    }

    pub async fn converge(&self, req: &ConvergeRequest) -> ClientResult<ConvergeResponse> {
        let mut req = req.clone();
        req.format = OutputFormat::Json;
        Ok(self.post("/v1/converge", &req).await?.json().await?)
    }

    pub async fn converge_csv(&self, req: &ConvergeRequest) -> ClientResult<String> {
        let mut req = req.clone();
        req.format = OutputFormat::Csv;
        Ok(self.post("/v1/converge", &req).await?.text().await?)
    }
}
