//! The toolkit behind an HTTP/JSON surface. Handlers parse one request,
//! run the computation on the blocking pool and answer with one report.

pub mod ops;

use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use m3v_api::{self as api, ApiError, ErrorBody};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::net::SocketAddr;
use tokio::net::TcpListener;

pub fn router() -> Router {
    Router::new()
        .route(api::HEALTH, get(|| async { Json(serde_json::json!({"status": "ok"})) }))
        .route(api::SOLVE, post(|p| handle(p, ops::solve)))
        .route(api::VOLUME, post(|p| handle(p, ops::volume)))
        .route(api::SPECTRUM, post(|p| handle(p, ops::spectrum)))
        .route(api::ZOGRAF, post(|p| handle(p, ops::zograf)))
        .route(api::TORSION, post(|p| handle(p, ops::torsion)))
        .route(api::VERIFY, post(|p| handle(p, ops::verify)))
}

fn error_response(status: StatusCode, error: ApiError) -> Response {
    (status, Json(ErrorBody { error })).into_response()
}

async fn handle<Req, Resp>(payload: Result<Json<Req>, JsonRejection>, op: fn(Req) -> Result<Resp, ApiError>) -> Response
where
    Req: DeserializeOwned + Send + 'static,
    Resp: Serialize + Send + 'static,
{
    let Json(req) = match payload {
        Ok(p) => p,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, ApiError { code: "bad-request".into(), message: e.body_text() }),
    };
    match tokio::task::spawn_blocking(move || op(req)).await {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, ApiError { code: "internal".into(), message: e.to_string() }),
    }
}

/// Bind `addr` and serve in a background task; returns the bound address.
pub async fn spawn(addr: &str) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router()).await {
            eprintln!("m3v-server: {e}");
        }
    });
    Ok(local)
}
