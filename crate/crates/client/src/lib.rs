//! Blocking client for the DSW HTTP service.
//!
//! Thin wrapper: each method posts/gets one endpoint and maps the
//! service's `{error, kind}` envelope into [`ClientError::Api`].

use dsw_api as api;
use reqwest::blocking::{Client, RequestBuilder};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Http(#[from] reqwest::Error),
    #[error("service error ({status} {kind}): {message}")]
    Api {
        status: u16,
        kind: String,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, ClientError>;

pub struct DswClient {
    base: String,
    http: Client,
}

impl DswClient {
    /// `base` like `http://127.0.0.1:8080` (trailing slash tolerated).
    pub fn new(base: impl Into<String>) -> Self {
        let mut base = base.into();
        while base.ends_with('/') {
            base.pop();
        }
        DswClient {
            base,
            http: Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let resp = req.send()?;
        let status = resp.status();
        if status.is_success() {
            Ok(resp.json()?)
        } else {
            let code = status.as_u16();
            let envelope: api::ApiError = resp.json().unwrap_or(api::ApiError {
                error: format!("http status {}", code),
                kind: "unknown".into(),
            });
            Err(ClientError::Api {
                status: code,
                kind: envelope.kind,
                message: envelope.error,
            })
        }
    }

    pub fn health(&self) -> Result<api::HealthResponse> {
        self.send(self.http.get(self.url("/health")))
    }

    pub fn error_curves(&self, req: &api::ErrorCurvesRequest) -> Result<api::ErrorCurvesResponse> {
        self.send(
            self.http
                .post(self.url("/v1/theory/error-curves"))
                .json(req),
        )
    }

    pub fn counts(&self, req: &api::CountsRequest) -> Result<api::CountsResponse> {
        self.send(self.http.post(self.url("/v1/theory/counts")).json(req))
    }

    pub fn create_session(
        &self,
        req: &api::CreateSessionRequest,
    ) -> Result<api::CreateSessionResponse> {
        self.send(self.http.post(self.url("/v1/sessions")).json(req))
    }

    pub fn lut(&self, session_id: &str) -> Result<api::LutResponse> {
        self.send(
            self.http
                .get(self.url(&format!("/v1/sessions/{}/lut", session_id))),
        )
    }

    pub fn proposals(
        &self,
        session_id: &str,
        req: &api::ProposalsRequest,
    ) -> Result<api::ProposalsResponse> {
        self.send(
            self.http
                .post(self.url(&format!("/v1/sessions/{}/proposals", session_id)))
                .json(req),
        )
    }

    pub fn delete_session(&self, session_id: &str) -> Result<()> {
        let resp = self
            .http
            .delete(self.url(&format!("/v1/sessions/{}", session_id)))
            .send()?;
        let status = resp.status();
        if status.is_success() {
            Ok(())
        } else {
            let code = status.as_u16();
            let envelope: api::ApiError = resp.json().unwrap_or(api::ApiError {
                error: format!("http status {}", code),
                kind: "unknown".into(),
            });
            Err(ClientError::Api {
                status: code,
                kind: envelope.kind,
                message: envelope.error,
            })
        }
    }

    pub fn evaluate(&self, req: &api::EvaluateRequest) -> Result<api::EvaluateResponse> {
        self.send(self.http.post(self.url("/v1/evaluate")).json(req))
    }

    pub fn synth(&self, req: &api::SynthRequest) -> Result<api::SynthResponse> {
        self.send(self.http.post(self.url("/v1/synth")).json(req))
    }
}
