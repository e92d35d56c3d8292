use axum::http::StatusCode;
use psn_core::model::Violation;
use psn_core::ServiceError;
use serde::Serialize;

/// Error document returned to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<Violation>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            violations: None,
        }
    }

    pub fn route_not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", "no such route")
    }

    pub fn method_not_allowed() -> Self {
        Self::new(
            StatusCode::METHOD_NOT_ALLOWED,
            "method_not_allowed",
            "method not allowed on this route",
        )
    }

    /// Body, query string or header that could not be decoded.
    pub fn malformed(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed", detail)
    }
}

/// Total mapping from service failures to transport errors. Internal
/// failures keep their detail out of the response; callers log it.
pub fn map_error(error: &ServiceError) -> ApiError {
    let status = match error {
        ServiceError::ValidationFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
        ServiceError::Unauthenticated | ServiceError::InvalidCredentials => {
            StatusCode::UNAUTHORIZED
        }
        ServiceError::Forbidden => StatusCode::FORBIDDEN,
        ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
        ServiceError::DuplicateKey(_)
        | ServiceError::DuplicateEmail
        | ServiceError::DuplicateMembership => StatusCode::CONFLICT,
        ServiceError::InvalidPage
        | ServiceError::EmptyKeyword
        | ServiceError::InvalidEmail
        | ServiceError::WeakPassword
        | ServiceError::ImmutableFieldChanged(_) => StatusCode::BAD_REQUEST,
        ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    let violations = match error {
        ServiceError::ValidationFailed(report) => Some(report.violations().to_vec()),
        _ => None,
    };
    ApiError {
        status,
        code: error.code(),
        message: error.to_string(),
        violations,
    }
}
