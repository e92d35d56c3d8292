//! A second, deliberately naive implementation of every account and
//! portfolio operation, used to check the real services step by step.
//!
//! Inputs are drawn from small pools whose validity is known up front, so the
//! oracle never calls the real validators. Ownership, uniqueness, ordering,
//! pagination, sessions and id allocation are all modelled here from scratch.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::{DateTime, Duration, TimeZone, Utc};
use psn_core::accounts::{Accounts, Argon2Scheme, Password};
use psn_core::clock::ManualClock;
use psn_core::ids::{MembershipId, ProjectId, SessionId, SnippetId, UserId};
use psn_core::model::{
    CodeSnippet, Membership, PersonalInfo, PresenceLink, ProfessionalInfo, Project, Session, User,
};
use psn_core::portfolio::{PortfolioService, ProjectPatch};
use psn_core::store::{MemStore, NextIds, StoreDump};
use psn_core::ServiceError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{redacted, CountingTokens};

pub const TTL_SECONDS: i64 = 1200;

pub type Outcome = Result<Value, &'static str>;

#[derive(Debug, Clone)]
pub enum Step {
    Register {
        email: String,
        password: String,
        first: String,
        last: String,
    },
    Authenticate {
        email: String,
        password: String,
    },
    Resolve {
        token: String,
    },
    Revoke {
        token: String,
    },
    Purge,
    Upsert {
        actor: Option<u64>,
        subject: u64,
        personal: PersonalInfo,
        professional: ProfessionalInfo,
        valid: bool,
    },
    CreateProject {
        actor: Option<u64>,
        title: String,
        description: String,
        skills: Vec<String>,
        hours: Option<i64>,
        valid: bool,
    },
    UpdateProject {
        actor: Option<u64>,
        project: u64,
        patch: ProjectPatch,
        valid: bool,
    },
    AddMember {
        actor: Option<u64>,
        project: u64,
        member: u64,
        responsibility: String,
        task: String,
        valid: bool,
    },
    UpdateMembership {
        actor: Option<u64>,
        membership: u64,
        responsibility: String,
        task: String,
        valid: bool,
    },
    RemoveMember {
        actor: Option<u64>,
        membership: u64,
    },
    AddSnippet {
        actor: Option<u64>,
        title: String,
        tag: Option<String>,
        body: String,
        valid: bool,
    },
    DeleteSnippet {
        actor: Option<u64>,
        snippet: u64,
    },
    Assemble {
        subject: u64,
        page: u32,
        size: u32,
    },
    Coworkers {
        subject: u64,
    },
    Search {
        keyword: String,
        page: u32,
        size: u32,
    },
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::Register { .. } => "register",
            Step::Authenticate { .. } => "authenticate",
            Step::Resolve { .. } => "resolve_session",
            Step::Revoke { .. } => "revoke_session",
            Step::Purge => "purge_expired_sessions",
            Step::Upsert { .. } => "upsert_profile",
            Step::CreateProject { .. } => "create_project",
            Step::UpdateProject { .. } => "update_project",
            Step::AddMember { .. } => "add_member",
            Step::UpdateMembership { .. } => "update_membership",
            Step::RemoveMember { .. } => "remove_member",
            Step::AddSnippet { .. } => "add_snippet",
            Step::DeleteSnippet { .. } => "delete_snippet",
            Step::Assemble { .. } => "assemble_portfolio",
            Step::Coworkers { .. } => "coworkers",
            Step::Search { .. } => "search_profiles",
        }
    }
}

struct OUser {
    personal: PersonalInfo,
    professional: ProfessionalInfo,
    password: String,
    created_at: DateTime<Utc>,
}

struct OSession {
    token: String,
    user: u64,
    created_at: DateTime<Utc>,
    expires_at: DateTime<Utc>,
}

pub struct Oracle {
    now: DateTime<Utc>,
    next_user: u64,
    next_project: u64,
    next_membership: u64,
    next_snippet: u64,
    next_session: u64,
    tokens_issued: u64,
    users: BTreeMap<u64, OUser>,
    projects: BTreeMap<u64, Project>,
    memberships: BTreeMap<u64, Membership>,
    snippets: BTreeMap<u64, CodeSnippet>,
    sessions: BTreeMap<u64, OSession>,
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn page_json(items: Vec<Value>, page: u32, size: u32) -> Value {
    let total = items.len();
    let start = (page as usize - 1).saturating_mul(size as usize);
    let slice: Vec<Value> = items.into_iter().skip(start).take(size as usize).collect();
    let display = if slice.is_empty() {
        format!("Displaying 0-0 of {total} result(s).")
    } else {
        format!(
            "Displaying {}-{} of {} result(s).",
            start + 1,
            start + slice.len(),
            total
        )
    };
    json!({ "items": slice, "page": page, "page_size": size, "total": total, "display": display })
}

pub fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2013, 4, 10, 0, 0, 0).unwrap()
}

impl Oracle {
    pub fn new() -> Self {
        Self {
            now: epoch(),
            next_user: 1,
            next_project: 1,
            next_membership: 1,
            next_snippet: 1,
            next_session: 1,
            tokens_issued: 0,
            users: BTreeMap::new(),
            projects: BTreeMap::new(),
            memberships: BTreeMap::new(),
            snippets: BTreeMap::new(),
            sessions: BTreeMap::new(),
        }
    }

    pub fn advance(&mut self, seconds: i64) {
        self.now += Duration::seconds(seconds);
    }

    fn actor(&self, actor: Option<u64>) -> Result<u64, &'static str> {
        match actor {
            Some(a) if self.users.contains_key(&a) => Ok(a),
            _ => Err("unauthenticated"),
        }
    }

    fn email_taken(&self, email: &str, except: Option<u64>) -> bool {
        let folded = email.to_lowercase();
        self.users
            .iter()
            .any(|(id, u)| Some(*id) != except && u.personal.email.to_lowercase() == folded)
    }

    fn may_edit_membership(&self, m: &Membership, actor: u64) -> bool {
        m.user_id.0 == actor
            || self.projects[&m.project_id.0]
                .people_in_charge
                .contains(&UserId(actor))
    }

    pub fn apply(&mut self, step: &Step) -> Outcome {
        match step {
            Step::Register {
                email,
                password,
                first,
                last,
            } => {
                let mailbox = match email.split_once('@') {
                    Some((l, d)) => !l.is_empty() && !d.is_empty() && !d.contains('@'),
                    None => false,
                };
                if !mailbox {
                    return Err("invalid_email");
                }
                if password.chars().count() < 8 {
                    return Err("weak_password");
                }
                let name_ok = |n: &str| !n.trim().is_empty() && n.chars().count() <= 100;
                if !name_ok(first) || !name_ok(last) {
                    return Err("validation_failed");
                }
                if self.email_taken(email, None) {
                    return Err("duplicate_email");
                }
                let id = self.next_user;
                self.next_user += 1;
                self.users.insert(
                    id,
                    OUser {
                        personal: PersonalInfo::minimal(email, first, last),
                        professional: ProfessionalInfo::default(),
                        password: password.clone(),
                        created_at: self.now,
                    },
                );
                Ok(json!(id))
            }
            Step::Authenticate { email, password } => {
                let folded = email.to_lowercase();
                let found = self
                    .users
                    .iter()
                    .find(|(_, u)| u.personal.email.to_lowercase() == folded);
                let Some((&user, u)) = found else {
                    return Err("invalid_credentials");
                };
                if &u.password != password {
                    return Err("invalid_credentials");
                }
                self.tokens_issued += 1;
                let token = format!("tok-{:06}", self.tokens_issued);
                let id = self.next_session;
                self.next_session += 1;
                let expires_at = self.now + Duration::seconds(TTL_SECONDS);
                self.sessions.insert(
                    id,
                    OSession {
                        token: token.clone(),
                        user,
                        created_at: self.now,
                        expires_at,
                    },
                );
                Ok(json!({ "token": token, "user_id": user, "expires_at": expires_at }))
            }
            Step::Resolve { token } => self
                .sessions
                .values()
                .find(|s| &s.token == token && s.expires_at > self.now)
                .map(|s| json!(s.user))
                .ok_or("unauthenticated"),
            Step::Revoke { token } => {
                self.sessions.retain(|_, s| &s.token != token);
                Ok(Value::Null)
            }
            Step::Purge => {
                let before = self.sessions.len();
                let now = self.now;
                self.sessions.retain(|_, s| s.expires_at > now);
                Ok(json!(before - self.sessions.len()))
            }
            Step::Upsert {
                actor,
                subject,
                personal,
                professional,
                valid,
            } => {
                let actor = self.actor(*actor)?;
                if actor != *subject {
                    return Err("forbidden");
                }
                if !valid {
                    return Err("validation_failed");
                }
                if self.email_taken(&personal.email, Some(actor)) {
                    return Err("duplicate_email");
                }
                let u = self.users.get_mut(&actor).unwrap();
                u.personal = personal.clone();
                u.professional = professional.clone();
                Ok(Value::Null)
            }
            Step::CreateProject {
                actor,
                title,
                description,
                skills,
                hours,
                valid,
            } => {
                let actor = self.actor(*actor)?;
                if !valid {
                    return Err("validation_failed");
                }
                let id = self.next_project;
                self.next_project += 1;
                let project = Project {
                    id: ProjectId(id),
                    title: title.clone(),
                    description: description.clone(),
                    skills_required: skills.clone(),
                    people_in_charge: vec![UserId(actor)],
                    dedicated_hours: *hours,
                    created_by: UserId(actor),
                    created_at: self.now,
                };
                self.projects.insert(id, project.clone());
                Ok(serde_json::to_value(project).unwrap())
            }
            Step::UpdateProject {
                actor,
                project,
                patch,
                valid,
            } => {
                let actor = self.actor(*actor)?;
                let Some(current) = self.projects.get(project) else {
                    return Err("not_found");
                };
                if !current.people_in_charge.contains(&UserId(actor)) {
                    return Err("forbidden");
                }
                let mut people_ok = true;
                if let Some(people) = &patch.people_in_charge {
                    let distinct: BTreeSet<_> = people.iter().collect();
                    people_ok = !people.is_empty()
                        && distinct.len() == people.len()
                        && people.iter().all(|p| self.users.contains_key(&p.0));
                }
                if !valid || !people_ok {
                    return Err("validation_failed");
                }
                let mut next = current.clone();
                if let Some(t) = &patch.title {
                    next.title = t.clone();
                }
                if let Some(d) = &patch.description {
                    next.description = d.clone();
                }
                if let Some(s) = &patch.skills_required {
                    next.skills_required = s.clone();
                }
                if let Some(p) = &patch.people_in_charge {
                    next.people_in_charge = p.clone();
                }
                if let Some(h) = patch.dedicated_hours {
                    next.dedicated_hours = Some(h);
                }
                self.projects.insert(*project, next.clone());
                Ok(serde_json::to_value(next).unwrap())
            }
            Step::AddMember {
                actor,
                project,
                member,
                responsibility,
                task,
                valid,
            } => {
                let actor = self.actor(*actor)?;
                let Some(p) = self.projects.get(project) else {
                    return Err("not_found");
                };
                if !p.people_in_charge.contains(&UserId(actor)) {
                    return Err("forbidden");
                }
                if !self.users.contains_key(member) {
                    return Err("not_found");
                }
                if !valid {
                    return Err("validation_failed");
                }
                if self
                    .memberships
                    .values()
                    .any(|m| m.project_id.0 == *project && m.user_id.0 == *member)
                {
                    return Err("duplicate_membership");
                }
                let id = self.next_membership;
                self.next_membership += 1;
                self.memberships.insert(
                    id,
                    Membership {
                        id: MembershipId(id),
                        project_id: ProjectId(*project),
                        user_id: UserId(*member),
                        responsibility: responsibility.clone(),
                        task_description: task.clone(),
                        created_at: self.now,
                    },
                );
                Ok(json!(id))
            }
            Step::UpdateMembership {
                actor,
                membership,
                responsibility,
                task,
                valid,
            } => {
                let actor = self.actor(*actor)?;
                let Some(m) = self.memberships.get(membership) else {
                    return Err("not_found");
                };
                if !self.may_edit_membership(m, actor) {
                    return Err("forbidden");
                }
                if !valid {
                    return Err("validation_failed");
                }
                let m = self.memberships.get_mut(membership).unwrap();
                m.responsibility = responsibility.clone();
                m.task_description = task.clone();
                Ok(Value::Null)
            }
            Step::RemoveMember { actor, membership } => {
                let actor = self.actor(*actor)?;
                let Some(m) = self.memberships.get(membership) else {
                    return Err("not_found");
                };
                if !self.may_edit_membership(m, actor) {
                    return Err("forbidden");
                }
                self.memberships.remove(membership);
                Ok(Value::Null)
            }
            Step::AddSnippet {
                actor,
                title,
                tag,
                body,
                valid,
            } => {
                let actor = self.actor(*actor)?;
                if !valid {
                    return Err("validation_failed");
                }
                let id = self.next_snippet;
                self.next_snippet += 1;
                self.snippets.insert(
                    id,
                    CodeSnippet {
                        id: SnippetId(id),
                        owner_id: UserId(actor),
                        title: title.clone(),
                        language_tag: tag.clone(),
                        body: body.clone(),
                        created_at: self.now,
                    },
                );
                Ok(json!(id))
            }
            Step::DeleteSnippet { actor, snippet } => {
                let actor = self.actor(*actor)?;
                let Some(s) = self.snippets.get(snippet) else {
                    return Err("not_found");
                };
                if s.owner_id.0 != actor {
                    return Err("forbidden");
                }
                self.snippets.remove(snippet);
                Ok(Value::Null)
            }
            Step::Assemble {
                subject,
                page,
                size,
            } => {
                let Some(u) = self.users.get(subject) else {
                    return Err("not_found");
                };
                if *page == 0 || *size == 0 {
                    return Err("invalid_page");
                }
                let mut mine: Vec<&Membership> = self
                    .memberships
                    .values()
                    .filter(|m| m.user_id.0 == *subject)
                    .collect();
                mine.sort_by_key(|m| (m.created_at, m.id));
                let entries = mine
                    .iter()
                    .map(|m| {
                        json!({
                            "project_id": m.project_id,
                            "project_title": self.projects[&m.project_id.0].title,
                            "responsibility": m.responsibility,
                            "task_description": m.task_description,
                        })
                    })
                    .collect();
                let mut snippets: Vec<&CodeSnippet> = self
                    .snippets
                    .values()
                    .filter(|s| s.owner_id.0 == *subject)
                    .collect();
                snippets.sort_by_key(|s| std::cmp::Reverse((s.created_at, s.id)));
                let snippets: Vec<Value> = snippets
                    .iter()
                    .map(|s| {
                        json!({
                            "id": s.id,
                            "title": s.title,
                            "language_tag": s.language_tag,
                            "body": s.body,
                            "created_at": s.created_at,
                        })
                    })
                    .collect();
                Ok(json!({
                    "user_id": subject,
                    "personal": u.personal,
                    "professional": u.professional,
                    "presence": u.personal.presence_links,
                    "projects": page_json(entries, *page, *size),
                    "snippets": snippets,
                }))
            }
            Step::Coworkers { subject } => {
                if !self.users.contains_key(subject) {
                    return Err("not_found");
                }
                let mut out = BTreeSet::new();
                for a in self
                    .memberships
                    .values()
                    .filter(|m| m.user_id.0 == *subject)
                {
                    for b in self.memberships.values() {
                        if b.project_id == a.project_id && b.user_id.0 != *subject {
                            out.insert(b.user_id.0);
                        }
                    }
                }
                Ok(json!(out.into_iter().collect::<Vec<_>>()))
            }
            Step::Search {
                keyword,
                page,
                size,
            } => {
                let needle = keyword.trim().to_lowercase();
                if needle.is_empty() {
                    return Err("empty_keyword");
                }
                if *page == 0 || *size == 0 {
                    return Err("invalid_page");
                }
                let mut users: Vec<(&u64, &OUser)> = self.users.iter().collect();
                users.sort_by_key(|(id, u)| (u.created_at, **id));
                let hits = users
                    .into_iter()
                    .filter(|(_, u)| {
                        let p = &u.personal;
                        let mut fields = vec![
                            p.first_name.clone(),
                            p.last_name.clone(),
                            format!("{} {}", p.first_name, p.last_name),
                            u.professional.headline.clone(),
                        ];
                        fields.extend(u.professional.specialities.iter().cloned());
                        fields.iter().any(|f| f.to_lowercase().contains(&needle))
                    })
                    .map(|(id, u)| {
                        json!({
                            "user_id": id,
                            "first_name": u.personal.first_name,
                            "last_name": u.personal.last_name,
                            "headline": u.professional.headline,
                            "specialities": u.professional.specialities,
                        })
                    })
                    .collect();
                Ok(page_json(hits, *page, *size))
            }
        }
    }

    /// Canonical dump with empty password digests.
    pub fn dump(&self) -> String {
        let dump = StoreDump {
            next_ids: NextIds {
                user: self.next_user,
                project: self.next_project,
                membership: self.next_membership,
                snippet: self.next_snippet,
                session: self.next_session,
            },
            users: self
                .users
                .iter()
                .map(|(id, u)| User {
                    id: UserId(*id),
                    personal: u.personal.clone(),
                    professional: u.professional.clone(),
                    password_digest: String::new(),
                    created_at: u.created_at,
                })
                .collect(),
            projects: self.projects.values().cloned().collect(),
            memberships: self.memberships.values().cloned().collect(),
            snippets: self.snippets.values().cloned().collect(),
            sessions: self
                .sessions
                .iter()
                .map(|(id, s)| Session {
                    id: SessionId(*id),
                    token_digest: sha256_hex(&s.token),
                    user_id: UserId(s.user),
                    created_at: s.created_at,
                    expires_at: s.expires_at,
                })
                .collect(),
        };
        dump.to_canonical_json()
    }

    pub fn user_ids(&self) -> Vec<u64> {
        self.users.keys().copied().collect()
    }

    fn project_ids(&self) -> Vec<u64> {
        self.projects.keys().copied().collect()
    }

    fn membership_ids(&self) -> Vec<u64> {
        self.memberships.keys().copied().collect()
    }

    fn snippet_ids(&self) -> Vec<u64> {
        self.snippets.keys().copied().collect()
    }

    fn tokens(&self) -> Vec<String> {
        (1..=self.tokens_issued)
            .map(|n| format!("tok-{n:06}"))
            .collect()
    }

    fn in_charge_of(&self, project: u64) -> Vec<u64> {
        self.projects
            .get(&project)
            .map(|p| p.people_in_charge.iter().map(|u| u.0).collect())
            .unwrap_or_default()
    }
}

/// The services under test, wired the same way the server wires them.
pub struct System {
    pub store: Arc<MemStore>,
    pub clock: Arc<ManualClock>,
    pub accounts: Accounts,
    pub portfolio: PortfolioService,
}

impl System {
    pub fn new() -> Self {
        let store = Arc::new(MemStore::new());
        let clock = Arc::new(ManualClock::new(epoch()));
        let accounts = Accounts::new(
            store.clone(),
            clock.clone(),
            Arc::new(CountingTokens::default()),
            Arc::new(Argon2Scheme::minimal()),
            Duration::seconds(TTL_SECONDS),
        );
        let portfolio = PortfolioService::new(store.clone(), clock.clone());
        Self {
            store,
            clock,
            accounts,
            portfolio,
        }
    }

    pub fn apply(&self, step: &Step) -> Outcome {
        fn done<T: serde::Serialize>(r: Result<T, ServiceError>) -> Outcome {
            r.map(|v| serde_json::to_value(v).unwrap())
                .map_err(|e| e.code())
        }
        let uid = |a: &Option<u64>| a.map(UserId);
        let p = &self.portfolio;
        match step {
            Step::Register { email, password, first, last } => {
                done(self.accounts.register(email, &Password::new(password.as_str()), first, last))
            }
            Step::Authenticate { email, password } => done(
                self.accounts
                    .authenticate(email, &Password::new(password.as_str()))
                    .map(|s| json!({ "token": s.token, "user_id": s.user_id, "expires_at": s.expires_at })),
            ),
            Step::Resolve { token } => done(self.accounts.resolve_session(token)),
            Step::Revoke { token } => done(self.accounts.revoke_session(token)),
            Step::Purge => done(self.accounts.purge_expired_sessions()),
            Step::Upsert { actor, subject, personal, professional, .. } => done(p.upsert_profile(
                uid(actor),
                UserId(*subject),
                personal.clone(),
                professional.clone(),
            )),
            Step::CreateProject { actor, title, description, skills, hours, .. } => {
                done(p.create_project(uid(actor), title, description, skills.clone(), *hours))
            }
            Step::UpdateProject { actor, project, patch, .. } => {
                done(p.update_project(uid(actor), ProjectId(*project), patch.clone()))
            }
            Step::AddMember { actor, project, member, responsibility, task, .. } => done(
                p.add_member(uid(actor), ProjectId(*project), UserId(*member), responsibility, task),
            ),
            Step::UpdateMembership { actor, membership, responsibility, task, .. } => done(
                p.update_membership(uid(actor), MembershipId(*membership), responsibility, task),
            ),
            Step::RemoveMember { actor, membership } => {
                done(p.remove_member(uid(actor), MembershipId(*membership)))
            }
            Step::AddSnippet { actor, title, tag, body, .. } => {
                done(p.add_snippet(uid(actor), title, tag.as_deref(), body))
            }
            Step::DeleteSnippet { actor, snippet } => {
                done(p.delete_snippet(uid(actor), SnippetId(*snippet)))
            }
            Step::Assemble { subject, page, size } => {
                done(p.assemble_portfolio(UserId(*subject), *page, *size))
            }
            Step::Coworkers { subject } => done(p.coworkers(UserId(*subject))),
            Step::Search { keyword, page, size } => done(p.search_profiles(keyword, *page, *size)),
        }
    }

    pub fn dump(&self) -> String {
        redacted(&*self.store)
    }
}

// ---- input pools: (value, valid) ----

const EMAILS: [(&str, bool); 9] = [
    ("josep@josep.com", true),
    ("JOSEP@josep.com", true),
    ("anna@x.org", true),
    ("lena@x.org", true),
    ("bob@y.net", true),
    ("carl@z.io", true),
    ("Anna@X.org", true),
    ("no-at-sign", false),
    ("two@@x.org", false),
];
const PASSWORDS: [&str; 3] = ["correct horse", "battery staple", "short"];
const FIRSTS: [(&str, bool); 5] = [
    ("Josep", true),
    ("Anna", true),
    ("Lena", true),
    ("  ", false),
    ("Bob", true),
];
const LASTS: [(&str, bool); 4] = [
    ("Colom", true),
    ("Berg", true),
    ("", false),
    ("Vidal", true),
];
const BIRTHDAYS: [(Option<&str>, bool); 5] = [
    (None, true),
    (Some("1984-06-04"), true),
    (Some("2013-04-10"), true),
    (Some("2100-01-01"), false),
    (Some("1984-02-30"), false),
];
const WEBSITES: [(Option<&str>, bool); 5] = [
    (None, true),
    (Some("www.josepcolom.com"), true),
    (Some("https://example.org/me"), true),
    (Some("javascript:alert(1)"), false),
    (Some(" "), false),
];
const HEADLINES: [(&str, bool); 3] = [
    ("Telecommunications and software engineer", true),
    ("", true),
    ("Video engineer", true),
];
const SUMMARIES: [&str; 2] = ["", "Engineer focused on LTE system level simulation."];
const TITLES: [(&str, bool); 4] = [
    ("Firefox Web Browser", true),
    ("PSN", true),
    ("   ", false),
    ("Projekt für Übersetzung", true),
];
const RESPONSIBILITIES: [(&str, bool); 4] = [
    ("Programming contributor", true),
    ("Tester", true),
    ("  ", false),
    ("Maintainer", true),
];
const TASKS: [&str; 3] = [
    "",
    "My task in the Mozilla foundation is to help to the developer team to find bugs and give advice.",
    "Nightly regression runs",
];
const KEYWORDS: [&str; 10] = [
    "lte",
    "LTE",
    "jo",
    "colom",
    "",
    "   ",
    "engineer",
    "zzz",
    "a",
    "anna berg",
];

fn pick<T: Copy>(rng: &mut ChaCha8Rng, pool: &[T]) -> T {
    pool[rng.random_range(0..pool.len())]
}

/// Like [`pick`], but only from the valid entries when `clean` is set.
fn pick_tagged<T: Copy>(rng: &mut ChaCha8Rng, pool: &[(T, bool)], clean: bool) -> (T, bool) {
    let pool: Vec<(T, bool)> = pool
        .iter()
        .copied()
        .filter(|(_, ok)| *ok || !clean)
        .collect();
    pick(rng, &pool)
}

fn skills(rng: &mut ChaCha8Rng) -> (Vec<String>, bool) {
    let (list, ok): (&[&str], bool) = match rng.random_range(0..6) {
        0 => (&[], true),
        1 => (&["LTE", "Video Coding"], true),
        2 => (&["C++", "JavaScript", "Rust"], true),
        3 => (&["LTE", "lte"], false),
        4 => (&["  "], false),
        _ => (&["Networks"], true),
    };
    (list.iter().map(|s| s.to_string()).collect(), ok)
}

fn long(n: usize) -> String {
    "x".repeat(n)
}

fn live_or_not(rng: &mut ChaCha8Rng, live: &[u64], next: u64) -> u64 {
    if !live.is_empty() && rng.random_bool(0.85) {
        pick(rng, live)
    } else {
        rng.random_range(1..next + 3)
    }
}

/// Mostly a live user, sometimes nobody or an unknown id.
fn actor(rng: &mut ChaCha8Rng, o: &Oracle) -> Option<u64> {
    let users = o.user_ids();
    match rng.random_range(0..20) {
        0 | 1 => None,
        2 => Some(o.next_user + 5),
        _ if users.is_empty() => None,
        _ => Some(pick(rng, &users)),
    }
}

/// One random step, shaped by the oracle's current state so that most
/// calls reach deep into the operation instead of failing early.
pub fn random_step(rng: &mut ChaCha8Rng, o: &Oracle) -> Step {
    let users = o.user_ids();
    let n_users = users.len();
    let kind = if n_users < 2 {
        rng.random_range(0..3)
    } else {
        rng.random_range(0..32)
    };
    match kind {
        0 | 1 => Step::Register {
            email: pick(rng, &EMAILS).0.to_string(),
            password: pick(rng, &PASSWORDS).to_string(),
            first: pick(rng, &FIRSTS).0.to_string(),
            last: pick(rng, &LASTS).0.to_string(),
        },
        2 | 3 => {
            let password = if rng.random_bool(0.8) {
                "correct horse"
            } else {
                "battery staple"
            };
            Step::Authenticate {
                email: pick(rng, &EMAILS).0.to_string(),
                password: password.to_string(),
            }
        }
        4 => {
            let tokens = o.tokens();
            let token = if !tokens.is_empty() && rng.random_bool(0.8) {
                let t: String = if rng.random_bool(0.5) {
                    tokens[tokens.len() - 1].clone()
                } else {
                    tokens[rng.random_range(0..tokens.len())].clone()
                };
                if rng.random_bool(0.1) {
                    // one character off
                    format!("{}x", &t[..t.len() - 1])
                } else {
                    t
                }
            } else {
                "tok-999999".to_string()
            };
            Step::Resolve { token }
        }
        5 => {
            let tokens = o.tokens();
            let token = if tokens.is_empty() {
                "".to_string()
            } else {
                tokens[rng.random_range(0..tokens.len())].clone()
            };
            Step::Revoke { token }
        }
        6 => Step::Purge,
        7..=9 => {
            let actor = actor(rng, o);
            let subject = if rng.random_bool(0.75) {
                actor.unwrap_or(1)
            } else {
                live_or_not(rng, &users, o.next_user)
            };
            let clean = rng.random_bool(0.6);
            let (email, e_ok) = pick_tagged(rng, &EMAILS, clean);
            let (first, f_ok) = pick_tagged(rng, &FIRSTS, clean);
            let (last, l_ok) = pick_tagged(rng, &LASTS, clean);
            let (birthday, b_ok) = pick_tagged(rng, &BIRTHDAYS, clean);
            let (website, w_ok) = pick_tagged(rng, &WEBSITES, clean);
            let (presence, p_ok) = match rng.random_range(0..if clean { 2 } else { 5 }) {
                0 => (vec![], true),
                1 => (
                    vec![
                        PresenceLink::new("Twitter", "http://www.twitter.com/josepcolom"),
                        PresenceLink::new("LinkedIn", "http://www.linkedin.com/in/josepcolom"),
                    ],
                    true,
                ),
                2 => (
                    vec![
                        PresenceLink::new("Twitter", "http://a.example"),
                        PresenceLink::new("twitter", "http://b.example"),
                    ],
                    false,
                ),
                3 => (
                    vec![PresenceLink::new("GitHub", "ftp://github.com/x")],
                    false,
                ),
                _ => (vec![PresenceLink::new("GitHub", "github.com/x")], true),
            };
            let (headline, h_ok) = if !clean && rng.random_bool(0.1) {
                (long(201), false)
            } else {
                let (h, ok) = pick(rng, &HEADLINES);
                (h.to_string(), ok)
            };
            let (specialities, s_ok) = if clean {
                (vec!["LTE".to_string()], true)
            } else {
                skills(rng)
            };
            let personal = PersonalInfo {
                first_name: first.to_string(),
                last_name: last.to_string(),
                email: email.to_string(),
                country: "Austria".into(),
                city: if rng.random_bool(0.5) {
                    "Viena".into()
                } else {
                    "Wien".into()
                },
                birthday: birthday.map(str::to_string),
                website_url: website.map(str::to_string),
                presence_links: presence,
            };
            let professional = ProfessionalInfo {
                headline,
                specialities,
                summary: pick(rng, &SUMMARIES).to_string(),
            };
            Step::Upsert {
                actor,
                subject,
                personal,
                professional,
                valid: e_ok && f_ok && l_ok && b_ok && w_ok && p_ok && h_ok && s_ok,
            }
        }
        10..=12 => {
            let (title, t_ok) = pick(rng, &TITLES);
            let (skills, s_ok) = skills(rng);
            let (hours, h_ok) = pick(
                rng,
                &[
                    (None, true),
                    (Some(0), true),
                    (Some(120), true),
                    (Some(-1), false),
                ],
            );
            Step::CreateProject {
                actor: actor(rng, o),
                title: title.to_string(),
                description: pick(rng, &["", "Free and open-source web browser."]).to_string(),
                skills,
                hours,
                valid: t_ok && s_ok && h_ok,
            }
        }
        13..=15 => {
            let project = live_or_not(rng, &o.project_ids(), o.next_project);
            let in_charge = o.in_charge_of(project);
            let actor = if !in_charge.is_empty() && rng.random_bool(0.7) {
                Some(pick(rng, &in_charge))
            } else {
                actor(rng, o)
            };
            let mut patch = ProjectPatch::default();
            let mut valid = true;
            if rng.random_bool(0.3) {
                let (t, ok) = pick(rng, &TITLES);
                patch.title = Some(t.to_string());
                valid &= ok;
            }
            if rng.random_bool(0.2) {
                patch.description = Some("Updated description".into());
            }
            if rng.random_bool(0.3) {
                let (s, ok) = skills(rng);
                patch.skills_required = Some(s);
                valid &= ok;
            }
            if rng.random_bool(0.3) {
                let (h, ok) = pick(rng, &[(40, true), (120, true), (-5, false)]);
                patch.dedicated_hours = Some(h);
                valid &= ok;
            }
            if rng.random_bool(0.3) {
                let me = actor.unwrap_or(1);
                let other = pick(rng, &users);
                patch.people_in_charge = Some(
                    match rng.random_range(0..6) {
                        0 => vec![],
                        1 => vec![me],
                        2 => vec![me, other],
                        3 => vec![me, me],
                        4 => vec![o.next_user + 9],
                        _ => vec![other],
                    }
                    .into_iter()
                    .map(UserId)
                    .collect(),
                );
            }
            Step::UpdateProject {
                actor,
                project,
                patch,
                valid,
            }
        }
        16..=19 => {
            let project = live_or_not(rng, &o.project_ids(), o.next_project);
            let in_charge = o.in_charge_of(project);
            let actor = if !in_charge.is_empty() && rng.random_bool(0.75) {
                Some(pick(rng, &in_charge))
            } else {
                actor(rng, o)
            };
            let (responsibility, r_ok) = if rng.random_bool(0.05) {
                (long(201), false)
            } else {
                let (r, ok) = pick(rng, &RESPONSIBILITIES);
                (r.to_string(), ok)
            };
            Step::AddMember {
                actor,
                project,
                member: live_or_not(rng, &users, o.next_user),
                responsibility,
                task: pick(rng, &TASKS).to_string(),
                valid: r_ok,
            }
        }
        20 | 21 => {
            let membership = live_or_not(rng, &o.membership_ids(), o.next_membership);
            let actor = match o.memberships.get(&membership) {
                Some(m) if rng.random_bool(0.4) => Some(m.user_id.0),
                Some(m) if rng.random_bool(0.5) => o.in_charge_of(m.project_id.0).first().copied(),
                _ => actor(rng, o),
            };
            let (responsibility, ok) = pick(rng, &RESPONSIBILITIES);
            Step::UpdateMembership {
                actor,
                membership,
                responsibility: responsibility.to_string(),
                task: pick(rng, &TASKS).to_string(),
                valid: ok,
            }
        }
        22 => {
            let membership = live_or_not(rng, &o.membership_ids(), o.next_membership);
            let actor = match o.memberships.get(&membership) {
                Some(m) if rng.random_bool(0.5) => Some(m.user_id.0),
                _ => actor(rng, o),
            };
            Step::RemoveMember { actor, membership }
        }
        23 | 24 => {
            let (title, t_ok) = pick(
                rng,
                &[("Decoder loop", true), (" ", false), ("Kernel", true)],
            );
            let (tag, g_ok) = match rng.random_range(0..5) {
                0 => (None, true),
                1 => (Some("c".to_string()), true),
                2 => (Some("  ".to_string()), false),
                3 => (Some(long(41)), false),
                _ => (Some("rust".to_string()), true),
            };
            let (body, b_ok) = match rng.random_range(0..5) {
                0 => (String::new(), false),
                1 => ("int main(void) { return 0; }".to_string(), true),
                2 => ("\t// señal ✓ 日本語   \r\n\tx += 1;  \n".to_string(), true),
                3 => ("\u{0}\u{feff}🎞 trailing   ".to_string(), true),
                _ => ("fn main() {}\n".repeat(rng.random_range(1..40)), true),
            };
            Step::AddSnippet {
                actor: actor(rng, o),
                title: title.to_string(),
                tag,
                body,
                valid: t_ok && g_ok && b_ok,
            }
        }
        25 => {
            let snippet = live_or_not(rng, &o.snippet_ids(), o.next_snippet);
            let actor = match o.snippets.get(&snippet) {
                Some(s) if rng.random_bool(0.6) => Some(s.owner_id.0),
                _ => actor(rng, o),
            };
            Step::DeleteSnippet { actor, snippet }
        }
        26..=28 => Step::Assemble {
            subject: live_or_not(rng, &users, o.next_user),
            page: rng.random_range(0..4),
            size: rng.random_range(0..4),
        },
        29 | 30 => Step::Coworkers {
            subject: live_or_not(rng, &users, o.next_user),
        },
        _ => Step::Search {
            keyword: pick(rng, &KEYWORDS).to_string(),
            page: rng.random_range(0..4),
            size: rng.random_range(0..4),
        },
    }
}

/// Per-step results, for coverage reporting.
#[derive(Debug, Default)]
pub struct Tally {
    pub ok: BTreeMap<&'static str, u64>,
    pub err: BTreeMap<&'static str, u64>,
}

/// Run one seeded script against both sides. Returns the first divergence.
pub fn run_script(seed: u64, steps: usize, tally: &mut Tally) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = Oracle::new();
    let system = System::new();
    for i in 0..steps {
        let dt = rng.random_range(1..=30);
        oracle.advance(dt);
        system.clock.advance(Duration::seconds(dt));

        let step = random_step(&mut rng, &oracle);
        let want = oracle.apply(&step);
        let got = system.apply(&step);
        if want != got {
            return Err(format!(
                "seed {seed} step {i} {}: expected {want:?}, got {got:?}\n{step:?}",
                step.name()
            ));
        }
        match &got {
            Ok(_) => *tally.ok.entry(step.name()).or_default() += 1,
            Err(code) => *tally.err.entry(code).or_default() += 1,
        }
    }
    let (want, got) = (oracle.dump(), system.dump());
    if want != got {
        return Err(format!(
            "seed {seed}: final dumps differ\n--- oracle\n{want}\n--- system\n{got}"
        ));
    }
    Ok(())
}
