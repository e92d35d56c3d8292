//! Fixture files, loaded through the public API only.
//!
//! Records refer to each other by fixture keys; the loader translates keys
//! into the ids the server hands out.

use std::collections::BTreeMap;
use std::path::Path;

use axum::http::{Method, StatusCode};
use psn_core::ids::{MembershipId, ProjectId, SnippetId, UserId};
use psn_core::model::{PersonalInfo, ProfessionalInfo};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::api::{Api, ApiRequest, ApiResponse};

/// The bundled example portfolio.
pub const JOSEP_COLOM: &str = include_str!("../fixtures/josep_colom.json");

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    #[serde(default)]
    pub users: Vec<FixtureUser>,
    #[serde(default)]
    pub projects: Vec<FixtureProject>,
    #[serde(default)]
    pub memberships: Vec<FixtureMembership>,
    #[serde(default)]
    pub snippets: Vec<FixtureSnippet>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureUser {
    pub key: String,
    pub email: String,
    pub password: String,
    pub first_name: String,
    pub last_name: String,
    #[serde(default)]
    pub personal: Option<PersonalInfo>,
    #[serde(default)]
    pub professional: Option<ProfessionalInfo>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureProject {
    pub key: String,
    pub created_by: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub skills_required: Vec<String>,
    #[serde(default)]
    pub dedicated_hours: Option<i64>,
    /// Replaces the creator as the only person in charge.
    #[serde(default)]
    pub people_in_charge: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureMembership {
    pub key: String,
    pub project: String,
    pub user: String,
    /// Who adds the member; the project creator when absent.
    #[serde(default)]
    pub added_by: Option<String>,
    pub responsibility: String,
    #[serde(default)]
    pub task_description: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSnippet {
    pub key: String,
    pub owner: String,
    pub title: String,
    #[serde(default)]
    pub language_tag: Option<String>,
    pub body: String,
}

/// Fixture keys mapped to the ids they received.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SeedReport {
    pub users: BTreeMap<String, UserId>,
    pub projects: BTreeMap<String, ProjectId>,
    pub memberships: BTreeMap<String, MembershipId>,
    pub snippets: BTreeMap<String, SnippetId>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read fixture: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture is not valid: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown {kind} key `{key}`")]
    UnknownKey { kind: &'static str, key: String },
    #[error("{step} failed with {status}: {body}")]
    Rejected {
        step: String,
        status: StatusCode,
        body: String,
    },
}

/// Anything that can carry an API request: the in-process [`Api`], or an
/// HTTP client in tests.
pub trait Client {
    fn send(&mut self, request: ApiRequest) -> ApiResponse;
}

impl Client for &Api {
    fn send(&mut self, request: ApiRequest) -> ApiResponse {
        self.handle(request)
    }
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self, FixtureError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, FixtureError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn josep_colom() -> Self {
        Self::from_json(JOSEP_COLOM).expect("bundled fixture parses")
    }

    pub fn load(&self, client: &mut dyn Client) -> Result<SeedReport, FixtureError> {
        let mut report = SeedReport::default();
        let mut tokens: BTreeMap<&str, String> = BTreeMap::new();
        let mut creators: BTreeMap<&str, &str> = BTreeMap::new();

        for u in &self.users {
            let step = format!("register {}", u.key);
            let body = expect(
                client.send(ApiRequest::new(Method::POST, "/v1/users").json(&json!({
                    "email": u.email,
                    "password": u.password,
                    "first_name": u.first_name,
                    "last_name": u.last_name,
                }))),
                StatusCode::CREATED,
                &step,
            )?;
            let id = UserId(body["user_id"].as_u64().unwrap_or_default());
            report.users.insert(u.key.clone(), id);

            let body = expect(
                client.send(ApiRequest::new(Method::POST, "/v1/sessions").json(&json!({
                    "email": u.email,
                    "password": u.password,
                }))),
                StatusCode::CREATED,
                &format!("sign in {}", u.key),
            )?;
            let token = body["token"].as_str().unwrap_or_default().to_string();

            if u.personal.is_some() || u.professional.is_some() {
                let personal = u.personal.clone().unwrap_or_else(|| {
                    PersonalInfo::minimal(&u.email, &u.first_name, &u.last_name)
                });
                let professional = u.professional.clone().unwrap_or_default();
                expect(
                    client.send(
                        ApiRequest::new(Method::PUT, &format!("/v1/users/{id}/profile"))
                            .bearer(&token)
                            .json(&json!({ "personal": personal, "professional": professional })),
                    ),
                    StatusCode::NO_CONTENT,
                    &format!("profile {}", u.key),
                )?;
            }
            tokens.insert(&u.key, token);
        }

        let token_of = |key: &str, tokens: &BTreeMap<&str, String>| {
            tokens
                .get(key)
                .cloned()
                .ok_or_else(|| FixtureError::UnknownKey {
                    kind: "user",
                    key: key.to_string(),
                })
        };
        let user_id = |key: &str, report: &SeedReport| {
            report
                .users
                .get(key)
                .copied()
                .ok_or_else(|| FixtureError::UnknownKey {
                    kind: "user",
                    key: key.to_string(),
                })
        };

        for p in &self.projects {
            let token = token_of(&p.created_by, &tokens)?;
            let body = expect(
                client.send(
                    ApiRequest::new(Method::POST, "/v1/projects")
                        .bearer(&token)
                        .json(&json!({
                            "title": p.title,
                            "description": p.description,
                            "skills_required": p.skills_required,
                            "dedicated_hours": p.dedicated_hours,
                        })),
                ),
                StatusCode::CREATED,
                &format!("project {}", p.key),
            )?;
            let id = ProjectId(body["id"].as_u64().unwrap_or_default());
            report.projects.insert(p.key.clone(), id);
            creators.insert(&p.key, &p.created_by);

            if let Some(people) = &p.people_in_charge {
                let ids = people
                    .iter()
                    .map(|k| user_id(k, &report))
                    .collect::<Result<Vec<_>, _>>()?;
                expect(
                    client.send(
                        ApiRequest::new(Method::PATCH, &format!("/v1/projects/{id}"))
                            .bearer(&token)
                            .json(&json!({ "people_in_charge": ids })),
                    ),
                    StatusCode::OK,
                    &format!("people in charge of {}", p.key),
                )?;
            }
        }

        for m in &self.memberships {
            let project = report.projects.get(&m.project).copied().ok_or_else(|| {
                FixtureError::UnknownKey {
                    kind: "project",
                    key: m.project.clone(),
                }
            })?;
            let adder = m
                .added_by
                .as_deref()
                .unwrap_or(creators[m.project.as_str()]);
            let token = token_of(adder, &tokens)?;
            let member = user_id(&m.user, &report)?;
            let body = expect(
                client.send(
                    ApiRequest::new(Method::POST, &format!("/v1/projects/{project}/members"))
                        .bearer(&token)
                        .json(&json!({
                            "user_id": member,
                            "responsibility": m.responsibility,
                            "task_description": m.task_description,
                        })),
                ),
                StatusCode::CREATED,
                &format!("membership {}", m.key),
            )?;
            report.memberships.insert(
                m.key.clone(),
                MembershipId(body["membership_id"].as_u64().unwrap_or_default()),
            );
        }

        for s in &self.snippets {
            let token = token_of(&s.owner, &tokens)?;
            let body = expect(
                client.send(
                    ApiRequest::new(Method::POST, "/v1/snippets")
                        .bearer(&token)
                        .json(&json!({
                            "title": s.title,
                            "language_tag": s.language_tag,
                            "body": s.body,
                        })),
                ),
                StatusCode::CREATED,
                &format!("snippet {}", s.key),
            )?;
            report.snippets.insert(
                s.key.clone(),
                SnippetId(body["snippet_id"].as_u64().unwrap_or_default()),
            );
        }

        // leave no live sessions behind
        for (key, token) in &tokens {
            expect(
                client.send(ApiRequest::new(Method::DELETE, "/v1/sessions/current").bearer(token)),
                StatusCode::NO_CONTENT,
                &format!("sign out {key}"),
            )?;
        }
        Ok(report)
    }
}

fn expect(response: ApiResponse, want: StatusCode, step: &str) -> Result<Value, FixtureError> {
    if response.status == want {
        Ok(response.body.unwrap_or(Value::Null))
    } else {
        Err(FixtureError::Rejected {
            step: step.to_string(),
            status: response.status,
            body: response.body.map(|b| b.to_string()).unwrap_or_default(),
        })
    }
}
