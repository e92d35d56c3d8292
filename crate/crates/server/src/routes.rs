//! The closed route table. Each route names exactly one service operation.

use axum::http::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Register,
    Authenticate,
    Revoke,
    Portfolio,
    UpsertProfile,
    CreateProject,
    UpdateProject,
    AddMember,
    UpdateMembership,
    RemoveMember,
    AddSnippet,
    DeleteSnippet,
    Coworkers,
    SearchProfiles,
}

impl Op {
    /// True for operations that never write.
    pub fn is_read_only(self) -> bool {
        matches!(self, Op::Portfolio | Op::Coworkers | Op::SearchProfiles)
    }
}

/// `{id}` marks the single numeric path parameter.
pub const ROUTES: &[(Method, &str, Op)] = &[
    (Method::POST, "/v1/users", Op::Register),
    (Method::POST, "/v1/sessions", Op::Authenticate),
    (Method::DELETE, "/v1/sessions/current", Op::Revoke),
    (Method::GET, "/v1/users/{id}/portfolio", Op::Portfolio),
    (Method::PUT, "/v1/users/{id}/profile", Op::UpsertProfile),
    (Method::POST, "/v1/projects", Op::CreateProject),
    (Method::PATCH, "/v1/projects/{id}", Op::UpdateProject),
    (Method::POST, "/v1/projects/{id}/members", Op::AddMember),
    (Method::PATCH, "/v1/memberships/{id}", Op::UpdateMembership),
    (Method::DELETE, "/v1/memberships/{id}", Op::RemoveMember),
    (Method::POST, "/v1/snippets", Op::AddSnippet),
    (Method::DELETE, "/v1/snippets/{id}", Op::DeleteSnippet),
    (Method::GET, "/v1/users/{id}/coworkers", Op::Coworkers),
    (Method::GET, "/v1/search/profiles", Op::SearchProfiles),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Miss {
    NotFound,
    /// The path exists under other methods, listed here.
    MethodNotAllowed(Vec<Method>),
}

/// Path parameter, if the pattern has one.
fn capture(pattern: &str, path: &str) -> Option<Option<u64>> {
    let mut id = None;
    let mut want = pattern.split('/');
    let mut have = path.split('/');
    loop {
        match (want.next(), have.next()) {
            (None, None) => return Some(id),
            (Some("{id}"), Some(seg)) => {
                if seg.is_empty() || !seg.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                id = Some(seg.parse().ok()?);
            }
            (Some(w), Some(h)) if w == h => {}
            _ => return None,
        }
    }
}

pub fn resolve(method: &Method, path: &str) -> Result<(Op, Option<u64>), Miss> {
    let mut allowed = Vec::new();
    for (m, pattern, op) in ROUTES {
        if let Some(id) = capture(pattern, path) {
            if m == method {
                return Ok((*op, id));
            }
            allowed.push(m.clone());
        }
    }
    if allowed.is_empty() {
        Err(Miss::NotFound)
    } else {
        Err(Miss::MethodNotAllowed(allowed))
    }
}
