//! Domain records shared by every layer.
//!
//! There is deliberately no education-history record and no image payload
//! anywhere: snippets are text.

mod page;
mod validate;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{MembershipId, ProjectId, SessionId, SnippetId, UserId};

pub use page::{display_line, paginate, Page, PageError, DEFAULT_PAGE_SIZE};
pub use validate::{
    has_disallowed_scheme, is_mailbox, limits, validate_membership, validate_personal_info,
    validate_professional_info, validate_project, validate_snippet, ValidationReport, Violation,
};

/// A pointer to the user's identity on another social network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresenceLink {
    pub network_name: String,
    pub url: String,
}

impl PresenceLink {
    pub fn new(network_name: impl Into<String>, url: impl Into<String>) -> Self {
        Self {
            network_name: network_name.into(),
            url: url.into(),
        }
    }
}

/// Identity block of a portfolio. All text is stored verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonalInfo {
    pub first_name: String,
    pub last_name: String,
    pub email: String,
    #[serde(default)]
    pub country: String,
    #[serde(default)]
    pub city: String,
    /// `YYYY-MM-DD`, kept as entered.
    #[serde(default)]
    pub birthday: Option<String>,
    #[serde(default)]
    pub website_url: Option<String>,
    #[serde(default)]
    pub presence_links: Vec<PresenceLink>,
}

impl PersonalInfo {
    /// The smallest record registration produces.
    pub fn minimal(
        email: impl Into<String>,
        first_name: impl Into<String>,
        last_name: impl Into<String>,
    ) -> Self {
        Self {
            first_name: first_name.into(),
            last_name: last_name.into(),
            email: email.into(),
            country: String::new(),
            city: String::new(),
            birthday: None,
            website_url: None,
            presence_links: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfessionalInfo {
    #[serde(default)]
    pub headline: String,
    #[serde(default)]
    pub specialities: Vec<String>,
    #[serde(default)]
    pub summary: String,
}

/// A registered user: profile plus the password digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub personal: PersonalInfo,
    pub professional: ProfessionalInfo,
    /// PHC-formatted salted digest. Never the raw password.
    pub password_digest: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: ProjectId,
    pub title: String,
    pub description: String,
    pub skills_required: Vec<String>,
    pub people_in_charge: Vec<UserId>,
    pub dedicated_hours: Option<i64>,
    pub created_by: UserId,
    pub created_at: DateTime<Utc>,
}

/// The user/project edge: who did what on which project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub id: MembershipId,
    pub project_id: ProjectId,
    pub user_id: UserId,
    pub responsibility: String,
    pub task_description: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSnippet {
    pub id: SnippetId,
    pub owner_id: UserId,
    pub title: String,
    pub language_tag: Option<String>,
    /// Byte-exact source text.
    pub body: String,
    pub created_at: DateTime<Utc>,
}

/// A live login. Only the SHA-256 of the bearer token is kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub token_digest: String,
    pub user_id: UserId,
    pub created_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}
