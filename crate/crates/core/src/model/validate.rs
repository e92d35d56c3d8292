use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{CodeSnippet, Membership, PersonalInfo, ProfessionalInfo, Project};

/// Length bounds, counted in Unicode scalar values.
pub mod limits {
    pub const NAME_MAX: usize = 100;
    pub const HEADLINE_MAX: usize = 200;
    pub const SUMMARY_MAX: usize = 5000;
    pub const KEYWORD_MAX: usize = 60;
    pub const PROJECT_TITLE_MAX: usize = 200;
    pub const RESPONSIBILITY_MAX: usize = 200;
    pub const SNIPPET_TITLE_MAX: usize = 200;
    pub const LANGUAGE_TAG_MAX: usize = 40;
    pub const SNIPPET_BODY_MAX: usize = 65536;
    pub const PASSWORD_MIN: usize = 8;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field_path: String,
    pub message: String,
}

/// Outcome of a validation pass. `valid` is true exactly when there are no
/// violations; the only constructor keeps the two in step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    valid: bool,
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            valid: violations.is_empty(),
            violations,
        }
    }

    pub fn ok() -> Self {
        Self::from_violations(Vec::new())
    }

    pub fn single(field_path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::from_violations(vec![Violation {
            field_path: field_path.into(),
            message: message.into(),
        }])
    }

    pub fn is_valid(&self) -> bool {
        self.valid
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn into_violations(self) -> Vec<Violation> {
        self.violations
    }

    pub fn has_violation_on(&self, field_path: &str) -> bool {
        self.violations.iter().any(|v| v.field_path == field_path)
    }

    /// Prefix every field path, e.g. `email` becomes `personal.email`.
    pub fn nested(self, prefix: &str) -> Self {
        Self::from_violations(
            self.violations
                .into_iter()
                .map(|v| Violation {
                    field_path: format!("{prefix}.{}", v.field_path),
                    message: v.message,
                })
                .collect(),
        )
    }

    pub fn merge(self, other: Self) -> Self {
        let mut violations = self.violations;
        violations.extend(other.violations);
        Self::from_violations(violations)
    }
}

#[derive(Default)]
struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, field_path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            field_path: field_path.into(),
            message: message.into(),
        });
    }

    fn bounded(&mut self, path: &str, value: &str, min: usize, max: usize) {
        let len = value.trim().chars().count();
        if len < min {
            self.push(path, "must not be empty");
        } else if value.chars().count() > max {
            self.push(path, format!("must be at most {max} characters"));
        }
    }

    fn keywords(&mut self, path: &str, keywords: &[String]) {
        let mut seen = HashSet::new();
        for (i, keyword) in keywords.iter().enumerate() {
            let item = format!("{path}[{i}]");
            if keyword.trim().is_empty() {
                self.push(item, "must not be empty");
            } else if keyword.chars().count() > limits::KEYWORD_MAX {
                self.push(
                    item,
                    format!("must be at most {} characters", limits::KEYWORD_MAX),
                );
            } else if !seen.insert(keyword.to_lowercase()) {
                self.push(item, "duplicate keyword (case-insensitive)");
            }
        }
    }

    fn link(&mut self, path: &str, url: &str) {
        if url.trim().is_empty() {
            self.push(path, "must not be empty");
        } else if has_disallowed_scheme(url) {
            self.push(path, "only http and https links are accepted");
        }
    }

    fn finish(self) -> ValidationReport {
        ValidationReport::from_violations(self.0)
    }
}

/// Exactly one `@` with something on both sides.
pub fn is_mailbox(email: &str) -> bool {
    match email.split_once('@') {
        Some((local, domain)) => !local.is_empty() && !domain.is_empty() && !domain.contains('@'),
        None => false,
    }
}

/// True when `url` starts with a scheme other than http(s). Scheme-less
/// values such as `www.example.com` or `example.com:8080/x` pass.
pub fn has_disallowed_scheme(url: &str) -> bool {
    let Some((scheme, rest)) = url.split_once(':') else {
        return false;
    };
    let looks_like_scheme = scheme
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic())
        && scheme
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    // host:port
    let port_follows = rest.chars().next().is_some_and(|c| c.is_ascii_digit());
    if !looks_like_scheme || port_follows {
        return false;
    }
    !(scheme.eq_ignore_ascii_case("http") || scheme.eq_ignore_ascii_case("https"))
}

fn parse_iso_date(raw: &str) -> Option<NaiveDate> {
    let bytes = raw.as_bytes();
    let shape_ok = bytes.len() == 10
        && bytes[4] == b'-'
        && bytes[7] == b'-'
        && bytes
            .iter()
            .enumerate()
            .all(|(i, b)| i == 4 || i == 7 || b.is_ascii_digit());
    if !shape_ok {
        return None;
    }
    let year = raw[0..4].parse().ok()?;
    let month = raw[5..7].parse().ok()?;
    let day = raw[8..10].parse().ok()?;
    NaiveDate::from_ymd_opt(year, month, day)
}

/// Checks the identity block. `today` bounds the birthday so that the result
/// depends on the arguments only.
pub fn validate_personal_info(info: &PersonalInfo, today: NaiveDate) -> ValidationReport {
    let mut out = Collector::default();
    out.bounded("first_name", &info.first_name, 1, limits::NAME_MAX);
    out.bounded("last_name", &info.last_name, 1, limits::NAME_MAX);
    if !is_mailbox(&info.email) {
        out.push("email", "must look like local@domain");
    }
    if let Some(birthday) = &info.birthday {
        match parse_iso_date(birthday) {
            None => out.push("birthday", "must be a calendar date in YYYY-MM-DD form"),
            Some(date) if date > today => out.push("birthday", "must not be in the future"),
            Some(_) => {}
        }
    }
    if let Some(website) = &info.website_url {
        out.link("website_url", website);
    }
    let mut networks = HashSet::new();
    for (i, link) in info.presence_links.iter().enumerate() {
        let name = link.network_name.trim();
        if name.is_empty() {
            out.push(
                format!("presence_links[{i}].network_name"),
                "must not be empty",
            );
        } else if !networks.insert(name.to_lowercase()) {
            out.push(
                format!("presence_links[{i}].network_name"),
                "only one link per network",
            );
        }
        out.link(&format!("presence_links[{i}].url"), &link.url);
    }
    out.finish()
}

pub fn validate_professional_info(info: &ProfessionalInfo) -> ValidationReport {
    let mut out = Collector::default();
    if info.headline.chars().count() > limits::HEADLINE_MAX {
        out.push(
            "headline",
            format!("must be at most {} characters", limits::HEADLINE_MAX),
        );
    }
    out.keywords("specialities", &info.specialities);
    if info.summary.chars().count() > limits::SUMMARY_MAX {
        out.push(
            "summary",
            format!("must be at most {} characters", limits::SUMMARY_MAX),
        );
    }
    out.finish()
}

pub fn validate_project(project: &Project) -> ValidationReport {
    let mut out = Collector::default();
    out.bounded("title", &project.title, 1, limits::PROJECT_TITLE_MAX);
    out.keywords("skills_required", &project.skills_required);
    if project.people_in_charge.is_empty() {
        out.push("people_in_charge", "at least one person must be in charge");
    }
    let mut seen = HashSet::new();
    for (i, user) in project.people_in_charge.iter().enumerate() {
        if !seen.insert(*user) {
            out.push(format!("people_in_charge[{i}]"), "listed twice");
        }
    }
    if project.dedicated_hours.is_some_and(|h| h < 0) {
        out.push("dedicated_hours", "must not be negative");
    }
    out.finish()
}

/// Field checks only; whether the project and user exist is checked by the
/// portfolio service against the store.
pub fn validate_membership(membership: &Membership) -> ValidationReport {
    let mut out = Collector::default();
    out.bounded(
        "responsibility",
        &membership.responsibility,
        1,
        limits::RESPONSIBILITY_MAX,
    );
    out.finish()
}

/// Bounds only. The body is never inspected for its characters: it is
/// evidence and must come back exactly as given.
pub fn validate_snippet(snippet: &CodeSnippet) -> ValidationReport {
    let mut out = Collector::default();
    out.bounded("title", &snippet.title, 1, limits::SNIPPET_TITLE_MAX);
    if let Some(tag) = &snippet.language_tag {
        out.bounded("language_tag", tag, 1, limits::LANGUAGE_TAG_MAX);
    }
    let body_len = snippet.body.chars().count();
    if body_len == 0 {
        out.push("body", "must not be empty");
    } else if body_len > limits::SNIPPET_BODY_MAX {
        out.push(
            "body",
            format!("must be at most {} characters", limits::SNIPPET_BODY_MAX),
        );
    }
    out.finish()
}
