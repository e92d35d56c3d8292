//! Persistence of every domain record.
//!
//! Both backends share one engine: each write is first planned against the
//! current state (constraint checks, cascades, id allocation) into a list of
//! primitive [`Change`]s, then journaled (disk backend only), then applied.
//! A failed check or a failed journal write leaves the state untouched, and
//! the whole plan is applied under one write lock so readers never observe a
//! half-applied cascade.

mod dump;
mod engine;
mod filter;
mod journal;
mod state;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{MembershipId, ProjectId, SessionId, SnippetId, UserId};
use crate::model::{paginate, CodeSnippet, Membership, Page, Project, Session, User};

pub use dump::{canonical_json, NextIds, StoreDump};
pub use engine::{DiskOptions, DiskStore, Engine, MemStore};
pub use filter::{Filter, Predicate};
pub use journal::{FileJournal, Journal, Volatile};
pub use state::Change;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    User,
    Project,
    Membership,
    Snippet,
    Session,
}

impl Kind {
    pub const ALL: [Kind; 5] = [
        Kind::User,
        Kind::Project,
        Kind::Membership,
        Kind::Snippet,
        Kind::Session,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::User => "user",
            Kind::Project => "project",
            Kind::Membership => "membership",
            Kind::Snippet => "snippet",
            Kind::Session => "session",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub kind: Kind,
    pub id: u64,
}

impl RecordKey {
    pub fn user(id: UserId) -> Self {
        Self {
            kind: Kind::User,
            id: id.0,
        }
    }
    pub fn project(id: ProjectId) -> Self {
        Self {
            kind: Kind::Project,
            id: id.0,
        }
    }
    pub fn membership(id: MembershipId) -> Self {
        Self {
            kind: Kind::Membership,
            id: id.0,
        }
    }
    pub fn snippet(id: SnippetId) -> Self {
        Self {
            kind: Kind::Snippet,
            id: id.0,
        }
    }
    pub fn session(id: SessionId) -> Self {
        Self {
            kind: Kind::Session,
            id: id.0,
        }
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Record {
    User(User),
    Project(Project),
    Membership(Membership),
    Snippet(CodeSnippet),
    Session(Session),
}

impl Record {
    pub fn kind(&self) -> Kind {
        match self {
            Record::User(_) => Kind::User,
            Record::Project(_) => Kind::Project,
            Record::Membership(_) => Kind::Membership,
            Record::Snippet(_) => Kind::Snippet,
            Record::Session(_) => Kind::Session,
        }
    }

    pub fn id(&self) -> u64 {
        match self {
            Record::User(r) => r.id.0,
            Record::Project(r) => r.id.0,
            Record::Membership(r) => r.id.0,
            Record::Snippet(r) => r.id.0,
            Record::Session(r) => r.id.0,
        }
    }

    pub fn key(&self) -> RecordKey {
        RecordKey {
            kind: self.kind(),
            id: self.id(),
        }
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        match self {
            Record::User(r) => r.created_at,
            Record::Project(r) => r.created_at,
            Record::Membership(r) => r.created_at,
            Record::Snippet(r) => r.created_at,
            Record::Session(r) => r.created_at,
        }
    }

    pub(crate) fn set_id(&mut self, id: u64) {
        match self {
            Record::User(r) => r.id = UserId(id),
            Record::Project(r) => r.id = ProjectId(id),
            Record::Membership(r) => r.id = MembershipId(id),
            Record::Snippet(r) => r.id = SnippetId(id),
            Record::Session(r) => r.id = SessionId(id),
        }
    }

    /// The record body as a JSON document, used by filters.
    pub fn to_document(&self) -> serde_json::Value {
        let value = match self {
            Record::User(r) => serde_json::to_value(r),
            Record::Project(r) => serde_json::to_value(r),
            Record::Membership(r) => serde_json::to_value(r),
            Record::Snippet(r) => serde_json::to_value(r),
            Record::Session(r) => serde_json::to_value(r),
        };
        value.expect("records always serialize")
    }
}

macro_rules! record_accessors {
    ($($variant:ident => $ty:ty, $into:ident;)*) => {
        impl Record {
            $(
                pub fn $into(self) -> Option<$ty> {
                    match self {
                        Record::$variant(r) => Some(r),
                        _ => None,
                    }
                }
            )*
        }
        $(
            impl From<$ty> for Record {
                fn from(r: $ty) -> Self {
                    Record::$variant(r)
                }
            }
        )*
    };
}

record_accessors! {
    User => User, into_user;
    Project => Project, into_project;
    Membership => Membership, into_membership;
    Snippet => CodeSnippet, into_snippet;
    Session => Session, into_session;
}

/// Secondary unique indexes the store maintains.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum UniqueKey {
    /// Compared case-insensitively.
    UserEmail(String),
    MembershipPair(ProjectId, UserId),
    SessionToken(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    UserEmail,
    MembershipPair,
    SessionToken,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::UserEmail => "user email",
            Constraint::MembershipPair => "membership (project, user)",
            Constraint::SessionToken => "session token",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("duplicate key: {0}")]
    DuplicateKey(Constraint),
    #[error("integrity violation: {0}")]
    IntegrityViolation(String),
    #[error("no record at {0}")]
    NotFound(RecordKey),
    #[error("field `{0}` cannot be changed")]
    ImmutableFieldChanged(&'static str),
    #[error("record kind does not match key")]
    KindMismatch,
    #[error("invalid page")]
    InvalidPage,
    #[error("record changed since it was read")]
    Stale,
    #[error("storage i/o: {0}")]
    Io(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
}

/// Live record counts per kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreStats {
    pub counts: BTreeMap<Kind, u64>,
}

/// The storage contract. Every call is atomic and isolated.
pub trait Store: Send + Sync {
    /// Insert `record` under a fresh id; the id inside `record` is ignored.
    fn create(&self, record: Record) -> Result<RecordKey, StoreError>;

    fn get(&self, key: RecordKey) -> Option<Record>;

    fn update(&self, key: RecordKey, record: Record) -> Result<(), StoreError>;

    /// Like [`Store::update`] but fails with [`StoreError::Stale`] unless the
    /// stored value still equals `expected`.
    fn compare_and_update(
        &self,
        key: RecordKey,
        expected: &Record,
        record: Record,
    ) -> Result<(), StoreError>;

    /// Remove a record and everything that depends on it.
    fn delete(&self, key: RecordKey) -> Result<(), StoreError>;

    fn find_unique(&self, key: &UniqueKey) -> Option<RecordKey>;

    /// Every matching record of `kind`, ordered by `(created_at, id)`.
    fn scan(&self, kind: Kind, filter: &Filter) -> Vec<Record>;

    fn query(
        &self,
        kind: Kind,
        filter: &Filter,
        page_number: u32,
        page_size: u32,
    ) -> Result<Page<Record>, StoreError> {
        let rows = self.scan(kind, filter);
        paginate(&rows, page_number, page_size).map_err(|_| StoreError::InvalidPage)
    }

    fn dump(&self) -> StoreDump;

    fn stats(&self) -> StoreStats;
}

/// Typed lookups over any [`Store`].
pub trait StoreExt: Store {
    fn user(&self, id: UserId) -> Option<User> {
        self.get(RecordKey::user(id)).and_then(Record::into_user)
    }
    fn project(&self, id: ProjectId) -> Option<Project> {
        self.get(RecordKey::project(id))
            .and_then(Record::into_project)
    }
    fn membership(&self, id: MembershipId) -> Option<Membership> {
        self.get(RecordKey::membership(id))
            .and_then(Record::into_membership)
    }
    fn snippet(&self, id: SnippetId) -> Option<CodeSnippet> {
        self.get(RecordKey::snippet(id))
            .and_then(Record::into_snippet)
    }
    fn session(&self, id: SessionId) -> Option<Session> {
        self.get(RecordKey::session(id))
            .and_then(Record::into_session)
    }
}

impl<S: Store + ?Sized> StoreExt for S {}
