//! Portfolio business logic on top of the store.
//!
//! Mutations take the acting user as `Option<UserId>`: `None` means the
//! request carried no valid session. Ownership rules:
//!
//! - a profile is edited only by its user;
//! - a project is edited, and its members managed, by its people in charge;
//! - a membership is edited or removed by the project's people in charge or
//!   by the member;
//! - a snippet is deleted only by its owner.
//!
//! Reads are public.

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::error::ServiceError;
use crate::ids::{MembershipId, ProjectId, SnippetId, UserId};
use crate::model::{
    paginate, validate_membership, validate_personal_info, validate_professional_info,
    validate_project, validate_snippet, CodeSnippet, Membership, Page, PersonalInfo, PresenceLink,
    ProfessionalInfo, Project, ValidationReport,
};
use crate::store::{Filter, Kind, Record, RecordKey, Store, StoreError, StoreExt};

/// One row of the "projects and responsibilities" table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectEntry {
    pub project_id: ProjectId,
    pub project_title: String,
    pub responsibility: String,
    pub task_description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetView {
    pub id: SnippetId,
    pub title: String,
    pub language_tag: Option<String>,
    pub body: String,
    pub created_at: DateTime<Utc>,
}

impl From<CodeSnippet> for SnippetView {
    fn from(s: CodeSnippet) -> Self {
        Self {
            id: s.id,
            title: s.title,
            language_tag: s.language_tag,
            body: s.body,
            created_at: s.created_at,
        }
    }
}

/// The public, assembled portfolio page. Carries no credential material.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortfolioView {
    pub user_id: UserId,
    pub personal: PersonalInfo,
    pub professional: ProfessionalInfo,
    pub presence: Vec<PresenceLink>,
    pub projects: Page<ProjectEntry>,
    pub snippets: Vec<SnippetView>,
}

/// Search hit shown to recruiters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSummary {
    pub user_id: UserId,
    pub first_name: String,
    pub last_name: String,
    pub headline: String,
    pub specialities: Vec<String>,
}

/// Partial project update; absent fields stay as they are.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectPatch {
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub skills_required: Option<Vec<String>>,
    #[serde(default)]
    pub people_in_charge: Option<Vec<UserId>>,
    #[serde(default)]
    pub dedicated_hours: Option<i64>,
}

pub struct PortfolioService {
    store: Arc<dyn Store>,
    clock: Arc<dyn Clock>,
}

fn failed(report: ValidationReport) -> Result<(), ServiceError> {
    if report.is_valid() {
        Ok(())
    } else {
        Err(ServiceError::ValidationFailed(report))
    }
}

impl PortfolioService {
    pub fn new(store: Arc<dyn Store>, clock: Arc<dyn Clock>) -> Self {
        Self { store, clock }
    }

    fn require(&self, actor: Option<UserId>) -> Result<UserId, ServiceError> {
        match actor {
            Some(id) if self.store.user(id).is_some() => Ok(id),
            _ => Err(ServiceError::Unauthenticated),
        }
    }

    /// Read-check-write against one record, retried until no concurrent
    /// writer got in between. `edit` sees the current value every round.
    fn modify(
        &self,
        key: RecordKey,
        missing: &'static str,
        mut edit: impl FnMut(&Record) -> Result<Record, ServiceError>,
    ) -> Result<Record, ServiceError> {
        loop {
            let current = self.store.get(key).ok_or(ServiceError::NotFound(missing))?;
            let next = edit(&current)?;
            match self.store.compare_and_update(key, &current, next.clone()) {
                Ok(()) => return Ok(next),
                Err(StoreError::Stale) => continue,
                Err(StoreError::NotFound(_)) => return Err(ServiceError::NotFound(missing)),
                // a referenced user disappeared after `edit` looked
                Err(StoreError::IntegrityViolation(_)) => {
                    return Err(ServiceError::NotFound("user"))
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn in_charge(&self, project: ProjectId, actor: UserId) -> Result<Project, ServiceError> {
        let project = self
            .store
            .project(project)
            .ok_or(ServiceError::NotFound("project"))?;
        if project.people_in_charge.contains(&actor) {
            Ok(project)
        } else {
            Err(ServiceError::Forbidden)
        }
    }

    /// Replace both profile blocks of `subject`. Only the subject may do this.
    pub fn upsert_profile(
        &self,
        actor: Option<UserId>,
        subject: UserId,
        personal: PersonalInfo,
        professional: ProfessionalInfo,
    ) -> Result<(), ServiceError> {
        let actor = self.require(actor)?;
        if actor != subject {
            return Err(ServiceError::Forbidden);
        }
        let today = self.clock.now().date_naive();
        failed(
            validate_personal_info(&personal, today)
                .nested("personal")
                .merge(validate_professional_info(&professional).nested("professional")),
        )?;
        self.modify(RecordKey::user(subject), "user", |current| {
            let Record::User(user) = current else {
                return Err(ServiceError::Internal("user key holds another kind".into()));
            };
            let mut user = user.clone();
            user.personal = personal.clone();
            user.professional = professional.clone();
            Ok(Record::User(user))
        })?;
        Ok(())
    }

    /// The creator starts out as the only person in charge.
    pub fn create_project(
        &self,
        actor: Option<UserId>,
        title: &str,
        description: &str,
        skills_required: Vec<String>,
        dedicated_hours: Option<i64>,
    ) -> Result<Project, ServiceError> {
        let actor = self.require(actor)?;
        let mut project = Project {
            id: ProjectId(0),
            title: title.to_string(),
            description: description.to_string(),
            skills_required,
            people_in_charge: vec![actor],
            dedicated_hours,
            created_by: actor,
            created_at: self.clock.now(),
        };
        failed(validate_project(&project))?;
        let key = self.store.create(Record::Project(project.clone()))?;
        project.id = ProjectId(key.id);
        Ok(project)
    }

    pub fn update_project(
        &self,
        actor: Option<UserId>,
        project_id: ProjectId,
        patch: ProjectPatch,
    ) -> Result<Project, ServiceError> {
        let actor = self.require(actor)?;
        let updated = self.modify(RecordKey::project(project_id), "project", |current| {
            let Record::Project(project) = current else {
                return Err(ServiceError::Internal(
                    "project key holds another kind".into(),
                ));
            };
            if !project.people_in_charge.contains(&actor) {
                return Err(ServiceError::Forbidden);
            }
            let mut project = project.clone();
            if let Some(title) = &patch.title {
                project.title = title.clone();
            }
            if let Some(description) = &patch.description {
                project.description = description.clone();
            }
            if let Some(skills) = &patch.skills_required {
                project.skills_required = skills.clone();
            }
            if let Some(people) = &patch.people_in_charge {
                project.people_in_charge = people.clone();
            }
            if let Some(hours) = patch.dedicated_hours {
                project.dedicated_hours = Some(hours);
            }
            let mut report = validate_project(&project);
            for (i, id) in project.people_in_charge.iter().enumerate() {
                if self.store.user(*id).is_none() {
                    report = report.merge(ValidationReport::single(
                        format!("people_in_charge[{i}]"),
                        "no such user",
                    ));
                }
            }
            failed(report)?;
            Ok(Record::Project(project))
        })?;
        Ok(updated.into_project().expect("project record"))
    }

    pub fn add_member(
        &self,
        actor: Option<UserId>,
        project_id: ProjectId,
        member: UserId,
        responsibility: &str,
        task_description: &str,
    ) -> Result<MembershipId, ServiceError> {
        let actor = self.require(actor)?;
        self.in_charge(project_id, actor)?;
        if self.store.user(member).is_none() {
            return Err(ServiceError::NotFound("user"));
        }
        let membership = Membership {
            id: MembershipId(0),
            project_id,
            user_id: member,
            responsibility: responsibility.to_string(),
            task_description: task_description.to_string(),
            created_at: self.clock.now(),
        };
        failed(validate_membership(&membership))?;
        match self.store.create(Record::Membership(membership)) {
            Ok(key) => Ok(MembershipId(key.id)),
            Err(StoreError::IntegrityViolation(_)) => Err(ServiceError::NotFound("project")),
            Err(e) => Err(e.into()),
        }
    }

    fn may_edit_membership(&self, membership: &Membership, actor: UserId) -> bool {
        membership.user_id == actor
            || self
                .store
                .project(membership.project_id)
                .is_some_and(|p| p.people_in_charge.contains(&actor))
    }

    pub fn update_membership(
        &self,
        actor: Option<UserId>,
        membership_id: MembershipId,
        responsibility: &str,
        task_description: &str,
    ) -> Result<(), ServiceError> {
        let actor = self.require(actor)?;
        self.modify(
            RecordKey::membership(membership_id),
            "membership",
            |current| {
                let Record::Membership(m) = current else {
                    return Err(ServiceError::Internal(
                        "membership key holds another kind".into(),
                    ));
                };
                if !self.may_edit_membership(m, actor) {
                    return Err(ServiceError::Forbidden);
                }
                let mut m = m.clone();
                m.responsibility = responsibility.to_string();
                m.task_description = task_description.to_string();
                failed(validate_membership(&m))?;
                Ok(Record::Membership(m))
            },
        )?;
        Ok(())
    }

    pub fn remove_member(
        &self,
        actor: Option<UserId>,
        membership_id: MembershipId,
    ) -> Result<(), ServiceError> {
        let actor = self.require(actor)?;
        let membership = self
            .store
            .membership(membership_id)
            .ok_or(ServiceError::NotFound("membership"))?;
        if !self.may_edit_membership(&membership, actor) {
            return Err(ServiceError::Forbidden);
        }
        match self.store.delete(RecordKey::membership(membership_id)) {
            Ok(()) => Ok(()),
            Err(StoreError::NotFound(_)) => Err(ServiceError::NotFound("membership")),
            Err(e) => Err(e.into()),
        }
    }

    /// Stores `body` exactly as given.
    pub fn add_snippet(
        &self,
        actor: Option<UserId>,
        title: &str,
        language_tag: Option<&str>,
        body: &str,
    ) -> Result<SnippetId, ServiceError> {
        let actor = self.require(actor)?;
        let snippet = CodeSnippet {
            id: SnippetId(0),
            owner_id: actor,
            title: title.to_string(),
            language_tag: language_tag.map(str::to_string),
            body: body.to_string(),
            created_at: self.clock.now(),
        };
        failed(validate_snippet(&snippet))?;
        let key = self.store.create(Record::Snippet(snippet))?;
        Ok(SnippetId(key.id))
    }

    pub fn delete_snippet(
        &self,
        actor: Option<UserId>,
        snippet_id: SnippetId,
    ) -> Result<(), ServiceError> {
        let actor = self.require(actor)?;
        let snippet = self
            .store
            .snippet(snippet_id)
            .ok_or(ServiceError::NotFound("snippet"))?;
        if snippet.owner_id != actor {
            return Err(ServiceError::Forbidden);
        }
        match self.store.delete(RecordKey::snippet(snippet_id)) {
            Ok(()) => Ok(()),
            Err(StoreError::NotFound(_)) => Err(ServiceError::NotFound("snippet")),
            Err(e) => Err(e.into()),
        }
    }

    /// Projects in membership-creation order, snippets newest first.
    pub fn assemble_portfolio(
        &self,
        subject: UserId,
        page_number: u32,
        page_size: u32,
    ) -> Result<PortfolioView, ServiceError> {
        let user = self
            .store
            .user(subject)
            .ok_or(ServiceError::NotFound("user"))?;
        let entries: Vec<ProjectEntry> = self
            .store
            .scan(Kind::Membership, &Filter::all().eq("user_id", subject.0))
            .into_iter()
            .filter_map(Record::into_membership)
            .filter_map(|m| {
                let project = self.store.project(m.project_id)?;
                Some(ProjectEntry {
                    project_id: project.id,
                    project_title: project.title,
                    responsibility: m.responsibility,
                    task_description: m.task_description,
                })
            })
            .collect();
        let projects =
            paginate(&entries, page_number, page_size).map_err(|_| ServiceError::InvalidPage)?;
        let mut snippets: Vec<SnippetView> = self
            .store
            .scan(Kind::Snippet, &Filter::all().eq("owner_id", subject.0))
            .into_iter()
            .filter_map(Record::into_snippet)
            .map(SnippetView::from)
            .collect();
        snippets.reverse();
        Ok(PortfolioView {
            user_id: user.id,
            presence: user.personal.presence_links.clone(),
            personal: user.personal,
            professional: user.professional,
            projects,
            snippets,
        })
    }

    /// Users sharing at least one project membership with `subject`.
    pub fn coworkers(&self, subject: UserId) -> Result<Vec<UserId>, ServiceError> {
        if self.store.user(subject).is_none() {
            return Err(ServiceError::NotFound("user"));
        }
        let projects: BTreeSet<ProjectId> = self
            .store
            .scan(Kind::Membership, &Filter::all().eq("user_id", subject.0))
            .into_iter()
            .filter_map(Record::into_membership)
            .map(|m| m.project_id)
            .collect();
        let mut others = BTreeSet::new();
        for project in projects {
            for m in self
                .store
                .scan(Kind::Membership, &Filter::all().eq("project_id", project.0))
                .into_iter()
                .filter_map(Record::into_membership)
            {
                if m.user_id != subject {
                    others.insert(m.user_id);
                }
            }
        }
        Ok(others.into_iter().collect())
    }

    /// Case-insensitive substring search over names, headline and
    /// specialities.
    pub fn search_profiles(
        &self,
        keyword: &str,
        page_number: u32,
        page_size: u32,
    ) -> Result<Page<UserSummary>, ServiceError> {
        let needle = keyword.trim().to_lowercase();
        if needle.is_empty() {
            return Err(ServiceError::EmptyKeyword);
        }
        let hits: Vec<UserSummary> = self
            .store
            .scan(Kind::User, &Filter::all())
            .into_iter()
            .filter_map(Record::into_user)
            .filter(|u| {
                let p = &u.personal;
                let full_name = format!("{} {}", p.first_name, p.last_name);
                let matched = [
                    &p.first_name,
                    &p.last_name,
                    &full_name,
                    &u.professional.headline,
                ]
                .into_iter()
                .chain(u.professional.specialities.iter())
                .any(|text| text.to_lowercase().contains(&needle));
                matched
            })
            .map(|u| UserSummary {
                user_id: u.id,
                first_name: u.personal.first_name,
                last_name: u.personal.last_name,
                headline: u.professional.headline,
                specialities: u.professional.specialities,
            })
            .collect();
        paginate(&hits, page_number, page_size).map_err(|_| ServiceError::InvalidPage)
    }
}
