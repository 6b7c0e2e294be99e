//! HTTP API over the decisioning [`Service`].
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/applications` | profile document | `{application_id, decision}` |
//! | GET | `/applications/{id}` | | application |
//! | GET | `/applications/{id}/explanation` | | explanation report |
//! | GET | `/review-queue` | | queue entries |
//! | POST | `/applications/{id}/review` | review action | application |
//! | POST | `/applications/{id}/what-if` | `{exclude_item_ids}` | what-if response |
//! | GET | `/audit?after=N` | | audit events |
//!
//! Errors are returned as `{"error": code, "message": text}` with status 400
//! (validation, consent), 404 (unknown id), 409 (wrong state) or 500.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use socialcredit_core::service::{ReviewAction, Service, ServiceError, WhatIfRequest};
use socialcredit_core::Config;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                error: code.into(),
                message: message.into(),
            },
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self {
            status: StatusCode::from_u16(e.status_code()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
            body: ErrorBody {
                error: e.code().into(),
                message: e.to_string(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs a blocking service call off the async executor.
async fn blocking<T, F>(svc: Arc<Service>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody {
                error: "internal".into(),
                message: e.to_string(),
            },
        })?
        .map_err(ApiError::from)
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_request", e.to_string()))
}

async fn submit(State(svc): State<Arc<Service>>, body: Bytes) -> ApiResult<Response> {
    let r = blocking(svc, move |s| s.submit_application(&body)).await?;
    Ok((StatusCode::CREATED, Json(r)).into_response())
}

async fn application(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let app = blocking(svc, move |s| s.get_application(&id)).await?;
    Ok(Json(app).into_response())
}

async fn explanation(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let report = blocking(svc, move |s| s.get_explanation(&id)).await?;
    Ok(Json(report).into_response())
}

async fn review_queue(State(svc): State<Arc<Service>>) -> ApiResult<Response> {
    let q = blocking(svc, |s| s.list_review_queue()).await?;
    Ok(Json(q).into_response())
}

async fn review(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let action: ReviewAction = parse_json(&body)?;
    let app = blocking(svc, move |s| s.resolve_review(&id, action)).await?;
    Ok(Json(app).into_response())
}

async fn what_if(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: WhatIfRequest = parse_json(&body)?;
    if req.application_id.as_deref().is_some_and(|a| a != id) {
        return Err(ApiError::bad_request(
            "invalid_request",
            "application_id in the body does not match the path",
        ));
    }
    let r = blocking(svc, move |s| s.reassess_what_if(&id, &req.exclude_item_ids)).await?;
    Ok(Json(r).into_response())
}

#[derive(Debug, Deserialize)]
struct AuditQuery {
    #[serde(default)]
    after: u64,
}

async fn audit(State(svc): State<Arc<Service>>, Query(q): Query<AuditQuery>) -> ApiResult<Response> {
    let events = blocking(svc, move |s| s.audit_after(q.after)).await?;
    Ok(Json(events).into_response())
}

pub fn router(svc: Arc<Service>) -> Router {
    Router::new()
        .route("/applications", post(submit))
        .route("/applications/{id}", get(application))
        .route("/applications/{id}/explanation", get(explanation))
        .route("/applications/{id}/review", post(review))
        .route("/applications/{id}/what-if", post(what_if))
        .route("/review-queue", get(review_queue))
        .route("/audit", get(audit))
        .with_state(svc)
}

/// Loads the config file if one is given, else the built-in config.
pub fn load_config(path: Option<&Path>) -> anyhow::Result<Config> {
    Ok(match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

/// Default store directory when none is configured.
pub fn default_store_dir() -> PathBuf {
    PathBuf::from("socialcredit-store")
}
