//! Portfolio social network core.
//!
//! Job seekers assemble a portfolio out of a profile, the projects they took
//! part in (with a per-project responsibility) and code snippets. Recruiters
//! read the assembled portfolio without an account.
//!
//! The crate is layered bottom-up:
//!
//! - [`model`]: domain records, validation rules and pagination. Pure.
//! - [`store`]: persistence with referential integrity, unique keys and
//!   cascading deletes. One in-memory and one journaled on-disk backend.
//! - [`accounts`]: registration, password verification and sessions.
//! - [`portfolio`]: profile, project, membership and snippet lifecycle plus
//!   the read side (portfolio view, co-workers, profile search).

pub mod accounts;
pub mod clock;
pub mod error;
pub mod ids;
pub mod model;
pub mod portfolio;
pub mod store;

pub use error::ServiceError;
pub use ids::{MembershipId, ProjectId, SessionId, SnippetId, UserId};
