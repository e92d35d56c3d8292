use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ids::{MembershipId, ProjectId, SessionId, SnippetId, UserId};
use crate::model::{CodeSnippet, Membership, Project, Session, User};

use super::{
    Constraint, Filter, Kind, NextIds, Record, RecordKey, StoreDump, StoreError, StoreStats,
    UniqueKey,
};

/// A primitive, already-checked mutation. Plans are lists of these and the
/// journal stores them verbatim, so replay never re-runs constraint logic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Put(Record),
    Remove(RecordKey),
}

#[derive(Debug, Default, Clone)]
pub(crate) struct StoreState {
    next: NextIds,
    users: BTreeMap<UserId, User>,
    projects: BTreeMap<ProjectId, Project>,
    memberships: BTreeMap<MembershipId, Membership>,
    snippets: BTreeMap<SnippetId, CodeSnippet>,
    sessions: BTreeMap<SessionId, Session>,
    emails: HashMap<String, UserId>,
    pairs: HashMap<(ProjectId, UserId), MembershipId>,
    tokens: HashMap<String, SessionId>,
}

fn email_key(email: &str) -> String {
    email.to_lowercase()
}

impl StoreState {
    pub(crate) fn get(&self, key: RecordKey) -> Option<Record> {
        match key.kind {
            Kind::User => self.users.get(&UserId(key.id)).cloned().map(Record::User),
            Kind::Project => self
                .projects
                .get(&ProjectId(key.id))
                .cloned()
                .map(Record::Project),
            Kind::Membership => self
                .memberships
                .get(&MembershipId(key.id))
                .cloned()
                .map(Record::Membership),
            Kind::Snippet => self
                .snippets
                .get(&SnippetId(key.id))
                .cloned()
                .map(Record::Snippet),
            Kind::Session => self
                .sessions
                .get(&SessionId(key.id))
                .cloned()
                .map(Record::Session),
        }
    }

    fn contains(&self, key: RecordKey) -> bool {
        match key.kind {
            Kind::User => self.users.contains_key(&UserId(key.id)),
            Kind::Project => self.projects.contains_key(&ProjectId(key.id)),
            Kind::Membership => self.memberships.contains_key(&MembershipId(key.id)),
            Kind::Snippet => self.snippets.contains_key(&SnippetId(key.id)),
            Kind::Session => self.sessions.contains_key(&SessionId(key.id)),
        }
    }

    pub(crate) fn find_unique(&self, key: &UniqueKey) -> Option<RecordKey> {
        match key {
            UniqueKey::UserEmail(email) => self
                .emails
                .get(&email_key(email))
                .map(|id| RecordKey::user(*id)),
            UniqueKey::MembershipPair(p, u) => self
                .pairs
                .get(&(*p, *u))
                .map(|id| RecordKey::membership(*id)),
            UniqueKey::SessionToken(digest) => {
                self.tokens.get(digest).map(|id| RecordKey::session(*id))
            }
        }
    }

    pub(crate) fn scan(&self, kind: Kind, filter: &Filter) -> Vec<Record> {
        fn collect<'a, T: Clone + 'a>(
            rows: impl Iterator<Item = &'a T>,
            wrap: fn(T) -> Record,
            filter: &Filter,
        ) -> Vec<Record> {
            rows.cloned()
                .map(wrap)
                .filter(|r| filter.is_empty() || filter.matches(&r.to_document()))
                .collect()
        }
        let mut rows = match kind {
            Kind::User => collect(self.users.values(), Record::User, filter),
            Kind::Project => collect(self.projects.values(), Record::Project, filter),
            Kind::Membership => collect(self.memberships.values(), Record::Membership, filter),
            Kind::Snippet => collect(self.snippets.values(), Record::Snippet, filter),
            Kind::Session => collect(self.sessions.values(), Record::Session, filter),
        };
        rows.sort_by_key(|r| (r.created_at(), r.id()));
        rows
    }

    pub(crate) fn stats(&self) -> StoreStats {
        let mut counts = BTreeMap::new();
        counts.insert(Kind::User, self.users.len() as u64);
        counts.insert(Kind::Project, self.projects.len() as u64);
        counts.insert(Kind::Membership, self.memberships.len() as u64);
        counts.insert(Kind::Snippet, self.snippets.len() as u64);
        counts.insert(Kind::Session, self.sessions.len() as u64);
        StoreStats { counts }
    }

    pub(crate) fn dump(&self) -> StoreDump {
        StoreDump {
            next_ids: self.next,
            users: self.users.values().cloned().collect(),
            projects: self.projects.values().cloned().collect(),
            memberships: self.memberships.values().cloned().collect(),
            snippets: self.snippets.values().cloned().collect(),
            sessions: self.sessions.values().cloned().collect(),
        }
    }

    /// Rebuild from a dump, re-checking uniqueness and references.
    pub(crate) fn from_dump(dump: StoreDump) -> Result<Self, StoreError> {
        let mut state = StoreState::default();
        let records = dump
            .users
            .into_iter()
            .map(Record::User)
            .chain(dump.projects.into_iter().map(Record::Project))
            .chain(dump.memberships.into_iter().map(Record::Membership))
            .chain(dump.snippets.into_iter().map(Record::Snippet))
            .chain(dump.sessions.into_iter().map(Record::Session));
        for record in records {
            let key = record.key();
            if state.contains(key) {
                return Err(StoreError::Corrupt(format!("{key} appears twice")));
            }
            state
                .check_unique(&record, None)
                .map_err(|e| StoreError::Corrupt(format!("{key}: {e}")))?;
            state
                .check_references(&record)
                .map_err(|e| StoreError::Corrupt(format!("{key}: {e}")))?;
            state.put(record);
        }
        for kind in Kind::ALL {
            let next = state.next.get_mut(kind);
            *next = (*next).max(dump.next_ids.get(kind));
        }
        Ok(state)
    }

    fn check_unique(
        &self,
        record: &Record,
        replacing: Option<RecordKey>,
    ) -> Result<(), StoreError> {
        let (unique, constraint) = match record {
            Record::User(u) => (
                UniqueKey::UserEmail(u.personal.email.clone()),
                Constraint::UserEmail,
            ),
            Record::Membership(m) => (
                UniqueKey::MembershipPair(m.project_id, m.user_id),
                Constraint::MembershipPair,
            ),
            Record::Session(s) => (
                UniqueKey::SessionToken(s.token_digest.clone()),
                Constraint::SessionToken,
            ),
            Record::Project(_) | Record::Snippet(_) => return Ok(()),
        };
        match self.find_unique(&unique) {
            Some(holder) if Some(holder) != replacing => Err(StoreError::DuplicateKey(constraint)),
            _ => Ok(()),
        }
    }

    fn check_references(&self, record: &Record) -> Result<(), StoreError> {
        let missing_user = |id: UserId, role: &str| {
            if self.users.contains_key(&id) {
                Ok(())
            } else {
                Err(StoreError::IntegrityViolation(format!(
                    "{role} user {id} does not exist"
                )))
            }
        };
        match record {
            Record::User(_) => Ok(()),
            Record::Project(p) => {
                for id in &p.people_in_charge {
                    missing_user(*id, "in-charge")?;
                }
                Ok(())
            }
            Record::Membership(m) => {
                if !self.projects.contains_key(&m.project_id) {
                    return Err(StoreError::IntegrityViolation(format!(
                        "project {} does not exist",
                        m.project_id
                    )));
                }
                missing_user(m.user_id, "member")
            }
            Record::Snippet(s) => missing_user(s.owner_id, "owner"),
            Record::Session(s) => missing_user(s.user_id, "session"),
        }
    }

    pub(crate) fn plan_create(
        &self,
        mut record: Record,
    ) -> Result<(RecordKey, Vec<Change>), StoreError> {
        record.set_id(self.next.get(record.kind()));
        if let Record::Project(p) = &record {
            if !self.users.contains_key(&p.created_by) {
                return Err(StoreError::IntegrityViolation(format!(
                    "creator {} does not exist",
                    p.created_by
                )));
            }
        }
        self.check_references(&record)?;
        self.check_unique(&record, None)?;
        Ok((record.key(), vec![Change::Put(record)]))
    }

    pub(crate) fn plan_update(
        &self,
        key: RecordKey,
        record: Record,
    ) -> Result<Vec<Change>, StoreError> {
        let current = self.get(key).ok_or(StoreError::NotFound(key))?;
        if record.kind() != key.kind {
            return Err(StoreError::KindMismatch);
        }
        if record.id() != key.id {
            return Err(StoreError::ImmutableFieldChanged("id"));
        }
        if record.created_at() != current.created_at() {
            return Err(StoreError::ImmutableFieldChanged("created_at"));
        }
        match (&current, &record) {
            (Record::Project(old), Record::Project(new)) if old.created_by != new.created_by => {
                return Err(StoreError::ImmutableFieldChanged("created_by"));
            }
            (Record::Membership(old), Record::Membership(new)) => {
                if old.project_id != new.project_id {
                    return Err(StoreError::ImmutableFieldChanged("project_id"));
                }
                if old.user_id != new.user_id {
                    return Err(StoreError::ImmutableFieldChanged("user_id"));
                }
            }
            (Record::Snippet(old), Record::Snippet(new)) if old.owner_id != new.owner_id => {
                return Err(StoreError::ImmutableFieldChanged("owner_id"));
            }
            (Record::Session(old), Record::Session(new)) => {
                if old.user_id != new.user_id {
                    return Err(StoreError::ImmutableFieldChanged("user_id"));
                }
                if old.token_digest != new.token_digest {
                    return Err(StoreError::ImmutableFieldChanged("token_digest"));
                }
            }
            _ => {}
        }
        if current == record {
            return Ok(Vec::new());
        }
        self.check_references(&record)?;
        self.check_unique(&record, Some(key))?;
        Ok(vec![Change::Put(record)])
    }

    pub(crate) fn plan_delete(&self, key: RecordKey) -> Result<Vec<Change>, StoreError> {
        if !self.contains(key) {
            return Err(StoreError::NotFound(key));
        }
        let mut changes = Vec::new();
        match key.kind {
            Kind::User => self.cascade_user(UserId(key.id), &mut changes),
            Kind::Project => {
                let project = ProjectId(key.id);
                changes.extend(self.memberships_of_project(project).map(Change::Remove));
                changes.push(Change::Remove(key));
            }
            Kind::Membership | Kind::Snippet | Kind::Session => changes.push(Change::Remove(key)),
        }
        Ok(changes)
    }

    fn memberships_of_project(&self, project: ProjectId) -> impl Iterator<Item = RecordKey> + '_ {
        self.memberships
            .values()
            .filter(move |m| m.project_id == project)
            .map(|m| RecordKey::membership(m.id))
    }

    /// Removing a user takes their memberships, snippets and sessions along,
    /// and drops them from every in-charge list. A project left with nobody
    /// in charge falls back to its creator, or is deleted when the creator is
    /// gone too.
    fn cascade_user(&self, user: UserId, changes: &mut Vec<Change>) {
        let mut removed: BTreeSet<RecordKey> = BTreeSet::new();
        for m in self.memberships.values().filter(|m| m.user_id == user) {
            removed.insert(RecordKey::membership(m.id));
        }
        for s in self.snippets.values().filter(|s| s.owner_id == user) {
            removed.insert(RecordKey::snippet(s.id));
        }
        for s in self.sessions.values().filter(|s| s.user_id == user) {
            removed.insert(RecordKey::session(s.id));
        }
        let mut rewritten = Vec::new();
        for project in self.projects.values() {
            if !project.people_in_charge.contains(&user) {
                continue;
            }
            let mut in_charge: Vec<UserId> = project
                .people_in_charge
                .iter()
                .copied()
                .filter(|id| *id != user)
                .collect();
            if in_charge.is_empty()
                && project.created_by != user
                && self.users.contains_key(&project.created_by)
            {
                in_charge.push(project.created_by);
            }
            if in_charge.is_empty() {
                removed.extend(self.memberships_of_project(project.id));
                removed.insert(RecordKey::project(project.id));
            } else {
                rewritten.push(Project {
                    people_in_charge: in_charge,
                    ..project.clone()
                });
            }
        }
        // dependents before parents so every prefix of the plan is consistent
        let order = |k: &RecordKey| match k.kind {
            Kind::Membership | Kind::Snippet | Kind::Session => 0,
            Kind::Project => 1,
            Kind::User => 2,
        };
        let mut removed: Vec<RecordKey> = removed.into_iter().collect();
        removed.sort_by_key(|k| (order(k), *k));
        changes.extend(
            rewritten
                .into_iter()
                .map(|p| Change::Put(Record::Project(p))),
        );
        changes.extend(removed.into_iter().map(Change::Remove));
        changes.push(Change::Remove(RecordKey::user(user)));
    }

    pub(crate) fn apply(&mut self, changes: &[Change]) {
        for change in changes {
            match change {
                Change::Put(record) => self.put(record.clone()),
                Change::Remove(key) => self.remove(*key),
            }
        }
    }

    fn put(&mut self, record: Record) {
        let key = record.key();
        self.remove(key);
        let next = self.next.get_mut(key.kind);
        *next = (*next).max(key.id + 1);
        match record {
            Record::User(u) => {
                self.emails.insert(email_key(&u.personal.email), u.id);
                self.users.insert(u.id, u);
            }
            Record::Project(p) => {
                self.projects.insert(p.id, p);
            }
            Record::Membership(m) => {
                self.pairs.insert((m.project_id, m.user_id), m.id);
                self.memberships.insert(m.id, m);
            }
            Record::Snippet(s) => {
                self.snippets.insert(s.id, s);
            }
            Record::Session(s) => {
                self.tokens.insert(s.token_digest.clone(), s.id);
                self.sessions.insert(s.id, s);
            }
        }
    }

    fn remove(&mut self, key: RecordKey) {
        match key.kind {
            Kind::User => {
                if let Some(u) = self.users.remove(&UserId(key.id)) {
                    self.emails.remove(&email_key(&u.personal.email));
                }
            }
            Kind::Project => {
                self.projects.remove(&ProjectId(key.id));
            }
            Kind::Membership => {
                if let Some(m) = self.memberships.remove(&MembershipId(key.id)) {
                    self.pairs.remove(&(m.project_id, m.user_id));
                }
            }
            Kind::Snippet => {
                self.snippets.remove(&SnippetId(key.id));
            }
            Kind::Session => {
                if let Some(s) = self.sessions.remove(&SessionId(key.id)) {
                    self.tokens.remove(&s.token_digest);
                }
            }
        }
    }
}
