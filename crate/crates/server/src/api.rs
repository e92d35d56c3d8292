//! Transport-independent request handling.
//!
//! A request goes through the same steps every time: parse the envelope,
//! resolve the bearer session into an actor, pick the route, decode the typed
//! body, call one service operation, render the result as JSON.

use std::sync::Arc;

use axum::http::{Method, StatusCode};
use chrono::{DateTime, Duration, Utc};
use psn_core::accounts::{
    Accounts, Argon2Scheme, Password, PasswordScheme, RandomTokens, TokenSource,
};
use psn_core::clock::{Clock, SystemClock};
use psn_core::ids::{MembershipId, ProjectId, SnippetId, UserId};
use psn_core::model::{PersonalInfo, ProfessionalInfo};
use psn_core::portfolio::{PortfolioService, ProjectPatch};
use psn_core::store::Store;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uuid::Uuid;

use crate::error::{map_error, ApiError};
use crate::routes::{self, Miss, Op};

/// What the transport hands over. Only the headers the API reads are kept.
#[derive(Debug, Clone)]
pub struct ApiRequest {
    pub method: Method,
    pub path: String,
    pub query: Option<String>,
    pub authorization: Option<String>,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    pub fn new(method: Method, path_and_query: &str) -> Self {
        let (path, query) = match path_and_query.split_once('?') {
            Some((p, q)) => (p.to_string(), Some(q.to_string())),
            None => (path_and_query.to_string(), None),
        };
        Self {
            method,
            path,
            query,
            authorization: None,
            content_type: None,
            body: Vec::new(),
        }
    }

    pub fn bearer(mut self, token: &str) -> Self {
        self.authorization = Some(format!("Bearer {token}"));
        self
    }

    pub fn json(mut self, body: &Value) -> Self {
        self.content_type = Some("application/json".into());
        self.body = serde_json::to_vec(body).expect("json value serializes");
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: StatusCode,
    pub body: Option<Value>,
    pub trace_id: String,
    /// Set on 405 responses.
    pub allow: Vec<Method>,
}

impl ApiResponse {
    /// `code` of an error body.
    pub fn error_code(&self) -> Option<&str> {
        self.body.as_ref()?.get("code")?.as_str()
    }
}

enum Reply {
    Created(Value),
    Ok(Value),
    NoContent,
}

fn to_value(v: impl Serialize) -> Result<Value, ApiError> {
    serde_json::to_value(v).map_err(|e| map_error(&psn_core::ServiceError::Internal(e.to_string())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterBody {
    email: String,
    password: String,
    first_name: String,
    last_name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoginBody {
    email: String,
    password: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileBody {
    personal: PersonalInfo,
    #[serde(default)]
    professional: ProfessionalInfo,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewProject {
    title: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    skills_required: Vec<String>,
    #[serde(default)]
    dedicated_hours: Option<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewMember {
    user_id: UserId,
    responsibility: String,
    #[serde(default)]
    task_description: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MembershipEdit {
    responsibility: String,
    #[serde(default)]
    task_description: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSnippet {
    title: String,
    #[serde(default)]
    language_tag: Option<String>,
    body: String,
}

#[derive(Deserialize)]
struct PageQuery {
    page: Option<u32>,
    page_size: Option<u32>,
}

#[derive(Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
    page: Option<u32>,
    page_size: Option<u32>,
}

#[derive(Serialize)]
struct SessionBody {
    token: String,
    user_id: UserId,
    expires_at: DateTime<Utc>,
}

pub struct Api {
    accounts: Accounts,
    portfolio: PortfolioService,
    store: Arc<dyn Store>,
    default_page_size: u32,
}

/// Everything an [`Api`] is built from. Tests swap the clock, token source
/// and password scheme for deterministic ones.
pub struct Parts {
    pub store: Arc<dyn Store>,
    pub clock: Arc<dyn Clock>,
    pub tokens: Arc<dyn TokenSource>,
    pub passwords: Arc<dyn PasswordScheme>,
    pub session_ttl: Duration,
    pub default_page_size: u32,
}

impl Parts {
    /// System clock, OS randomness and the default Argon2 cost.
    pub fn production(
        store: Arc<dyn Store>,
        session_ttl: Duration,
        default_page_size: u32,
    ) -> Self {
        Self {
            store,
            clock: Arc::new(SystemClock),
            tokens: Arc::new(RandomTokens),
            passwords: Arc::new(Argon2Scheme::default()),
            session_ttl,
            default_page_size,
        }
    }
}

impl Api {
    pub fn new(parts: Parts) -> Self {
        let accounts = Accounts::new(
            parts.store.clone(),
            parts.clock.clone(),
            parts.tokens,
            parts.passwords,
            parts.session_ttl,
        );
        let portfolio = PortfolioService::new(parts.store.clone(), parts.clock);
        Self {
            accounts,
            portfolio,
            store: parts.store,
            default_page_size: parts.default_page_size,
        }
    }

    pub fn store(&self) -> &Arc<dyn Store> {
        &self.store
    }

    pub fn accounts(&self) -> &Accounts {
        &self.accounts
    }

    pub fn handle(&self, request: ApiRequest) -> ApiResponse {
        let trace_id = Uuid::new_v4().to_string();
        let outcome = self.dispatch(&request, &trace_id);
        let response = match outcome {
            Ok(Reply::Created(body)) => respond(StatusCode::CREATED, Some(body), &trace_id),
            Ok(Reply::Ok(body)) => respond(StatusCode::OK, Some(body), &trace_id),
            Ok(Reply::NoContent) => respond(StatusCode::NO_CONTENT, None, &trace_id),
            Err((error, allow)) => {
                let mut body = serde_json::to_value(&error).unwrap_or_else(|_| json!({}));
                body["trace_id"] = Value::String(trace_id.clone());
                let mut response = respond(error.status, Some(body), &trace_id);
                response.allow = allow;
                response
            }
        };
        tracing::info!(
            trace_id = %trace_id,
            method = %request.method,
            path = %request.path,
            status = response.status.as_u16(),
            "request"
        );
        response
    }

    /// An error produced before the request reached the API, e.g. by the
    /// transport refusing an oversized body.
    pub fn reject(&self, error: ApiError) -> ApiResponse {
        let trace_id = Uuid::new_v4().to_string();
        let mut body = serde_json::to_value(&error).unwrap_or_else(|_| json!({}));
        body["trace_id"] = Value::String(trace_id.clone());
        respond(error.status, Some(body), &trace_id)
    }

    fn dispatch(
        &self,
        request: &ApiRequest,
        trace_id: &str,
    ) -> Result<Reply, (ApiError, Vec<Method>)> {
        let token = bearer_token(request.authorization.as_deref());
        let actor = token.and_then(|t| self.accounts.resolve_session(t).ok());
        let (op, id) =
            routes::resolve(&request.method, &request.path).map_err(|miss| match miss {
                Miss::NotFound => (ApiError::route_not_found(), Vec::new()),
                Miss::MethodNotAllowed(allow) => (ApiError::method_not_allowed(), allow),
            })?;
        self.invoke(op, id, actor, token, request).map_err(|e| {
            if e.status.is_server_error() {
                tracing::error!(trace_id = %trace_id, "internal failure");
            }
            (e, Vec::new())
        })
    }

    fn invoke(
        &self,
        op: Op,
        id: Option<u64>,
        actor: Option<UserId>,
        token: Option<&str>,
        request: &ApiRequest,
    ) -> Result<Reply, ApiError> {
        let id = id.unwrap_or_default();
        let fail = |e: psn_core::ServiceError| {
            if let psn_core::ServiceError::Internal(detail) = &e {
                tracing::error!(detail = %detail, "service failure");
            }
            map_error(&e)
        };
        match op {
            Op::Register => {
                let b: RegisterBody = decode(request)?;
                let user = self
                    .accounts
                    .register(
                        &b.email,
                        &Password::new(b.password),
                        &b.first_name,
                        &b.last_name,
                    )
                    .map_err(fail)?;
                Ok(Reply::Created(json!({ "user_id": user })))
            }
            Op::Authenticate => {
                let b: LoginBody = decode(request)?;
                let s = self
                    .accounts
                    .authenticate(&b.email, &Password::new(b.password))
                    .map_err(fail)?;
                Ok(Reply::Created(to_value(SessionBody {
                    token: s.token,
                    user_id: s.user_id,
                    expires_at: s.expires_at,
                })?))
            }
            Op::Revoke => {
                // only a live session can sign itself out
                let token = token
                    .filter(|_| actor.is_some())
                    .ok_or_else(|| fail(psn_core::ServiceError::Unauthenticated))?;
                self.accounts.revoke_session(token).map_err(fail)?;
                Ok(Reply::NoContent)
            }
            Op::Portfolio => {
                let q: PageQuery = query(request)?;
                let view = self
                    .portfolio
                    .assemble_portfolio(
                        UserId(id),
                        q.page.unwrap_or(1),
                        q.page_size.unwrap_or(self.default_page_size),
                    )
                    .map_err(fail)?;
                Ok(Reply::Ok(to_value(view)?))
            }
            Op::UpsertProfile => {
                let b: ProfileBody = decode(request)?;
                self.portfolio
                    .upsert_profile(actor, UserId(id), b.personal, b.professional)
                    .map_err(fail)?;
                Ok(Reply::NoContent)
            }
            Op::CreateProject => {
                let b: NewProject = decode(request)?;
                let project = self
                    .portfolio
                    .create_project(
                        actor,
                        &b.title,
                        &b.description,
                        b.skills_required,
                        b.dedicated_hours,
                    )
                    .map_err(fail)?;
                Ok(Reply::Created(to_value(project)?))
            }
            Op::UpdateProject => {
                let patch: ProjectPatch = decode(request)?;
                let project = self
                    .portfolio
                    .update_project(actor, ProjectId(id), patch)
                    .map_err(fail)?;
                Ok(Reply::Ok(to_value(project)?))
            }
            Op::AddMember => {
                let b: NewMember = decode(request)?;
                let membership = self
                    .portfolio
                    .add_member(
                        actor,
                        ProjectId(id),
                        b.user_id,
                        &b.responsibility,
                        &b.task_description,
                    )
                    .map_err(fail)?;
                Ok(Reply::Created(json!({ "membership_id": membership })))
            }
            Op::UpdateMembership => {
                let b: MembershipEdit = decode(request)?;
                self.portfolio
                    .update_membership(
                        actor,
                        MembershipId(id),
                        &b.responsibility,
                        &b.task_description,
                    )
                    .map_err(fail)?;
                Ok(Reply::NoContent)
            }
            Op::RemoveMember => {
                self.portfolio
                    .remove_member(actor, MembershipId(id))
                    .map_err(fail)?;
                Ok(Reply::NoContent)
            }
            Op::AddSnippet => {
                let b: NewSnippet = decode(request)?;
                let snippet = self
                    .portfolio
                    .add_snippet(actor, &b.title, b.language_tag.as_deref(), &b.body)
                    .map_err(fail)?;
                Ok(Reply::Created(json!({ "snippet_id": snippet })))
            }
            Op::DeleteSnippet => {
                self.portfolio
                    .delete_snippet(actor, SnippetId(id))
                    .map_err(fail)?;
                Ok(Reply::NoContent)
            }
            Op::Coworkers => {
                let coworkers = self.portfolio.coworkers(UserId(id)).map_err(fail)?;
                Ok(Reply::Ok(json!({ "user_id": id, "coworkers": coworkers })))
            }
            Op::SearchProfiles => {
                let q: SearchQuery = query(request)?;
                let page = self
                    .portfolio
                    .search_profiles(
                        &q.q,
                        q.page.unwrap_or(1),
                        q.page_size.unwrap_or(self.default_page_size),
                    )
                    .map_err(fail)?;
                Ok(Reply::Ok(to_value(page)?))
            }
        }
    }
}

fn respond(status: StatusCode, body: Option<Value>, trace_id: &str) -> ApiResponse {
    ApiResponse {
        status,
        body,
        trace_id: trace_id.to_string(),
        allow: Vec::new(),
    }
}

/// The token of an `Authorization: Bearer <token>` header.
fn bearer_token(header: Option<&str>) -> Option<&str> {
    let (scheme, token) = header?.trim().split_once(' ')?;
    let token = token.trim();
    (scheme.eq_ignore_ascii_case("bearer") && !token.is_empty()).then_some(token)
}

fn decode<T: DeserializeOwned>(request: &ApiRequest) -> Result<T, ApiError> {
    if let Some(ct) = &request.content_type {
        let mime = ct.split(';').next().unwrap_or_default().trim();
        if !mime.eq_ignore_ascii_case("application/json") {
            return Err(ApiError::malformed(format!(
                "expected an application/json body, got {mime}"
            )));
        }
    }
    if request.body.is_empty() {
        return Err(ApiError::malformed("request body is required"));
    }
    let value: Value =
        serde_json::from_slice(&request.body).map_err(|e| ApiError::malformed(e.to_string()))?;
    // serde would otherwise accept a struct written as an array
    if !value.is_object() {
        return Err(ApiError::malformed("request body must be a JSON object"));
    }
    serde_json::from_value(value).map_err(|e| ApiError::malformed(e.to_string()))
}

fn query<T: DeserializeOwned>(request: &ApiRequest) -> Result<T, ApiError> {
    serde_urlencoded::from_str(request.query.as_deref().unwrap_or_default())
        .map_err(|e| ApiError::malformed(format!("query string: {e}")))
}
