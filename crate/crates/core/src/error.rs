use thiserror::Error;

use crate::model::ValidationReport;
use crate::store::{Constraint, StoreError};

/// Everything the accounts and portfolio services can fail with.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("validation failed")]
    ValidationFailed(ValidationReport),
    #[error("authentication required")]
    Unauthenticated,
    #[error("not allowed to modify this resource")]
    Forbidden,
    #[error("{0} not found")]
    NotFound(&'static str),
    #[error("duplicate key: {0}")]
    DuplicateKey(String),
    #[error("email address is already registered")]
    DuplicateEmail,
    #[error("user is already a member of this project")]
    DuplicateMembership,
    #[error("page and page_size must be at least 1")]
    InvalidPage,
    #[error("search keyword must not be empty")]
    EmptyKeyword,
    #[error("password must be at least 8 characters")]
    WeakPassword,
    #[error("email address must look like local@domain")]
    InvalidEmail,
    #[error("invalid email or password")]
    InvalidCredentials,
    #[error("field `{0}` cannot be changed")]
    ImmutableFieldChanged(&'static str),
    /// Storage or other unexpected failure. The detail is for logs only.
    #[error("internal error")]
    Internal(String),
}

impl ServiceError {
    /// Machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::ValidationFailed(_) => "validation_failed",
            ServiceError::Unauthenticated => "unauthenticated",
            ServiceError::Forbidden => "forbidden",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::DuplicateKey(_) => "duplicate_key",
            ServiceError::DuplicateEmail => "duplicate_email",
            ServiceError::DuplicateMembership => "duplicate_membership",
            ServiceError::InvalidPage => "invalid_page",
            ServiceError::EmptyKeyword => "empty_keyword",
            ServiceError::WeakPassword => "weak_password",
            ServiceError::InvalidEmail => "invalid_email",
            ServiceError::InvalidCredentials => "invalid_credentials",
            ServiceError::ImmutableFieldChanged(_) => "immutable_field_changed",
            ServiceError::Internal(_) => "internal",
        }
    }
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::DuplicateKey(Constraint::UserEmail) => ServiceError::DuplicateEmail,
            StoreError::DuplicateKey(Constraint::MembershipPair) => {
                ServiceError::DuplicateMembership
            }
            StoreError::DuplicateKey(c) => ServiceError::DuplicateKey(c.to_string()),
            StoreError::NotFound(key) => ServiceError::NotFound(key.kind.as_str()),
            StoreError::ImmutableFieldChanged(field) => ServiceError::ImmutableFieldChanged(field),
            StoreError::InvalidPage => ServiceError::InvalidPage,
            other => ServiceError::Internal(other.to_string()),
        }
    }
}
