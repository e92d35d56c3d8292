//! axum glue: one fallback handler feeds every request into [`Api::handle`].

use std::future::Future;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::extract::{Request, State};
use axum::http::{header, HeaderValue};
use axum::response::Response;
use axum::Router;
use psn_core::ServiceError;
use tokio::net::TcpListener;

use crate::api::{Api, ApiRequest, ApiResponse};
use crate::error::{map_error, ApiError};

/// Large enough for a maximal snippet with every character escaped.
pub const MAX_BODY_BYTES: usize = 2 * 1024 * 1024;

pub fn router(api: Arc<Api>) -> Router {
    Router::new().fallback(handle).with_state(api)
}

pub async fn serve(
    listener: TcpListener,
    api: Arc<Api>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(api))
        .with_graceful_shutdown(shutdown)
        .await
}

fn header_text(parts: &axum::http::request::Parts, name: header::HeaderName) -> Option<String> {
    parts
        .headers
        .get(name)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
}

async fn handle(State(api): State<Arc<Api>>, request: Request) -> Response {
    let (parts, body) = request.into_parts();
    let api_request = match to_bytes(body, MAX_BODY_BYTES).await {
        Ok(bytes) => ApiRequest {
            method: parts.method.clone(),
            path: parts.uri.path().to_string(),
            query: parts.uri.query().map(str::to_string),
            authorization: header_text(&parts, header::AUTHORIZATION),
            content_type: header_text(&parts, header::CONTENT_TYPE),
            body: bytes.to_vec(),
        },
        Err(_) => {
            return render(api.reject(ApiError::malformed("request body too large or unreadable")))
        }
    };
    let worker = api.clone();
    match tokio::task::spawn_blocking(move || worker.handle(api_request)).await {
        Ok(r) => render(r),
        Err(e) => {
            tracing::error!(error = %e, "request handler panicked");
            render(api.reject(map_error(&ServiceError::Internal(e.to_string()))))
        }
    }
}

fn render(r: ApiResponse) -> Response {
    let body = match &r.body {
        Some(v) => Body::from(serde_json::to_vec(v).unwrap_or_default()),
        None => Body::empty(),
    };
    let mut response = Response::new(body);
    *response.status_mut() = r.status;
    let headers = response.headers_mut();
    if r.body.is_some() {
        headers.insert(
            header::CONTENT_TYPE,
            HeaderValue::from_static("application/json; charset=utf-8"),
        );
    }
    if let Ok(v) = HeaderValue::from_str(&r.trace_id) {
        headers.insert("x-trace-id", v);
    }
    if !r.allow.is_empty() {
        let allow: Vec<&str> = r.allow.iter().map(|m| m.as_str()).collect();
        if let Ok(v) = HeaderValue::from_str(&allow.join(", ")) {
            headers.insert(header::ALLOW, v);
        }
    }
    response
}
