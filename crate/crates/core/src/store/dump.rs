use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::model::{CodeSnippet, Membership, Project, Session, User};

use super::Kind;

/// Next id to hand out, per kind. Ids are never reused within a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextIds {
    pub user: u64,
    pub project: u64,
    pub membership: u64,
    pub snippet: u64,
    pub session: u64,
}

impl Default for NextIds {
    fn default() -> Self {
        Self {
            user: 1,
            project: 1,
            membership: 1,
            snippet: 1,
            session: 1,
        }
    }
}

impl NextIds {
    pub fn get(&self, kind: Kind) -> u64 {
        match kind {
            Kind::User => self.user,
            Kind::Project => self.project,
            Kind::Membership => self.membership,
            Kind::Snippet => self.snippet,
            Kind::Session => self.session,
        }
    }

    pub fn get_mut(&mut self, kind: Kind) -> &mut u64 {
        match kind {
            Kind::User => &mut self.user,
            Kind::Project => &mut self.project,
            Kind::Membership => &mut self.membership,
            Kind::Snippet => &mut self.snippet,
            Kind::Session => &mut self.session,
        }
    }
}

/// Full store contents, every list ordered by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreDump {
    pub next_ids: NextIds,
    pub users: Vec<User>,
    pub projects: Vec<Project>,
    pub memberships: Vec<Membership>,
    pub snippets: Vec<CodeSnippet>,
    pub sessions: Vec<Session>,
}

impl StoreDump {
    /// Pretty JSON with object keys sorted at every level.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("dump serializes"))
    }

    pub fn from_json(raw: &str) -> serde_json::Result<Self> {
        serde_json::from_str(raw)
    }
}

struct Sorted<'a>(&'a Value);

impl Serialize for Sorted<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Value::Object(map) => {
                let mut entries: Vec<_> = map.iter().collect();
                entries.sort_by(|a, b| a.0.cmp(b.0));
                let mut out = serializer.serialize_map(Some(entries.len()))?;
                for (k, v) in entries {
                    out.serialize_entry(k, &Sorted(v))?;
                }
                out.end()
            }
            Value::Array(items) => {
                let mut out = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    out.serialize_element(&Sorted(item))?;
                }
                out.end()
            }
            other => other.serialize(serializer),
        }
    }
}

/// Stable rendering of any JSON document: sorted keys, two-space indent,
/// trailing newline.
pub fn canonical_json(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(&Sorted(value)).expect("json value serializes");
    out.push('\n');
    out
}
