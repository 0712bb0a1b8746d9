//! Thin async client for the m3v service. One method per endpoint; the
//! request and response types are the shared wire types.

use m3v_api::*;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The service rejected the request with a coded error.
    #[error("{0}")]
    Api(ApiError),
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("unexpected {status} response: {body}")]
    Unexpected { status: StatusCode, body: String },
}

impl ClientError {
    pub fn code(&self) -> &str {
        match self {
            ClientError::Api(e) => &e.code,
            ClientError::Transport(_) => "transport",
            ClientError::Unexpected { .. } => "unexpected-response",
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        Client { base, http: reqwest::Client::new() }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, req: &Req) -> Result<Resp> {
        let resp = self.http.post(format!("{}{path}", self.base)).json(req).send().await?;
        decode(resp).await
    }

    pub async fn health(&self) -> Result<()> {
        let resp = self.http.get(format!("{}{HEALTH}", self.base)).send().await?;
        decode::<serde::de::IgnoredAny>(resp).await.map(|_| ())
    }

    pub async fn solve(&self, req: &SolveRequest) -> Result<SolveResponse> {
        self.post(SOLVE, req).await
    }

    pub async fn volume(&self, req: &SolveRequest) -> Result<VolumeResponse> {
        self.post(VOLUME, req).await
    }

    pub async fn spectrum(&self, req: &SpectrumRequest) -> Result<SpectrumResponse> {
        self.post(SPECTRUM, req).await
    }

    pub async fn zograf(&self, req: &ZografRequest) -> Result<ZografResponse> {
        self.post(ZOGRAF, req).await
    }

    pub async fn torsion(&self, req: &TorsionRequest) -> Result<TorsionResponse> {
        self.post(TORSION, req).await
    }

    pub async fn verify(&self, req: &VerifyRequest) -> Result<VerifyResponse> {
        self.post(VERIFY, req).await
    }
}

async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T> {
    let status = resp.status();
    let body = resp.text().await?;
    if status.is_success() {
        if let Ok(v) = serde_json::from_str(&body) {
            return Ok(v);
        }
    } else if let Ok(e) = serde_json::from_str::<ErrorBody>(&body) {
        return Err(ClientError::Api(e.error));
    }
    Err(ClientError::Unexpected { status, body })
}
