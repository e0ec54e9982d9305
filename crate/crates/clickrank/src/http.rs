//! HTTP + JSON API.
//!
//! | method | path            | auth   | success                 |
//! |--------|-----------------|--------|-------------------------|
//! | POST   | `/api/register` | none   | 201 profile             |
//! | POST   | `/api/login`    | none   | 200 `{token,expires_at}`|
//! | GET    | `/api/search`   | bearer | 200 `SearchResponse`    |
//! | POST   | `/api/click`    | bearer | 204                     |
//! | GET    | `/api/history`  | bearer | 200 per-query history   |
//! | GET    | `/api/patterns` | bearer | 200 frequent patterns   |
//!
//! Errors are `{"error": "..."}` with status 400, 401, 404 or 409.

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::engine::{Algorithm, ClickRequest, Engine, ServiceError};
use crate::users::NewUser;

/// Set to `true` on `/api/click` responses when the client timestamp was
/// replaced by server time.
pub const TS_SUBSTITUTED_HEADER: &str = "x-clickrank-ts-substituted";

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Internal(msg) => {
                log::error!("{msg}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/api/register", post(register))
        .route("/api/login", post(login))
        .route("/api/search", get(search))
        .route("/api/click", post(click))
        .route("/api/history", get(history))
        .route("/api/patterns", get(patterns))
        .with_state(engine)
}

fn bearer(headers: &HeaderMap) -> Result<&str, ServiceError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer ").or_else(|| v.strip_prefix("bearer ")))
        .map(str::trim)
        .ok_or_else(|| ServiceError::Unauthorized("missing bearer token".into()))
}

async fn register(State(engine): State<Arc<Engine>>, Json(req): Json<NewUser>) -> Result<Response, ServiceError> {
    let profile = engine.register(req)?;
    Ok((StatusCode::CREATED, Json(profile)).into_response())
}

#[derive(Deserialize)]
struct LoginRequest {
    username: String,
    password: String,
}

async fn login(State(engine): State<Arc<Engine>>, Json(req): Json<LoginRequest>) -> Result<Response, ServiceError> {
    Ok(Json(engine.login(&req.username, &req.password)?).into_response())
}

#[derive(Deserialize)]
struct SearchParams {
    #[serde(default)]
    q: String,
}

async fn search(
    State(engine): State<Arc<Engine>>,
    headers: HeaderMap,
    Query(params): Query<SearchParams>,
) -> Result<Response, ServiceError> {
    let token = bearer(&headers)?;
    Ok(Json(engine.search(token, &params.q)?).into_response())
}

async fn click(
    State(engine): State<Arc<Engine>>,
    headers: HeaderMap,
    Json(req): Json<ClickRequest>,
) -> Result<Response, ServiceError> {
    let token = bearer(&headers)?;
    let ack = engine.click(token, req)?;
    let mut response = StatusCode::NO_CONTENT.into_response();
    if ack.ts_substituted {
        response.headers_mut().insert(TS_SUBSTITUTED_HEADER, HeaderValue::from_static("true"));
    }
    Ok(response)
}

async fn history(State(engine): State<Arc<Engine>>, headers: HeaderMap) -> Result<Response, ServiceError> {
    let token = bearer(&headers)?;
    Ok(Json(engine.history(token)?).into_response())
}

#[derive(Deserialize)]
struct PatternParams {
    algo: String,
    min_sup: f64,
}

async fn patterns(
    State(engine): State<Arc<Engine>>,
    headers: HeaderMap,
    Query(params): Query<PatternParams>,
) -> Result<Response, ServiceError> {
    let token = bearer(&headers)?;
    let algo: Algorithm = params.algo.parse().map_err(ServiceError::BadRequest)?;
    Ok(Json(engine.patterns(token, algo, params.min_sup)?).into_response())
}

/// Serves until ctrl-c.
pub async fn serve(engine: Arc<Engine>, listen: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
