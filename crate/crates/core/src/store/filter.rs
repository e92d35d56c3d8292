use serde_json::Value;

/// A conjunction of predicates over a record's JSON document.
///
/// Field paths are dotted, e.g. `personal.email`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Filter {
    predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// The field equals `value` exactly.
    Equals { field: String, value: Value },
    /// At least one of `fields` contains `keyword`, case-insensitively. A
    /// field holding a list of strings matches when any element does.
    Contains {
        fields: Vec<String>,
        keyword: String,
    },
}

impl Filter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn eq(mut self, field: impl Into<String>, value: impl Into<Value>) -> Self {
        self.predicates.push(Predicate::Equals {
            field: field.into(),
            value: value.into(),
        });
        self
    }

    pub fn contains<I, S>(mut self, fields: I, keyword: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.predicates.push(Predicate::Contains {
            fields: fields.into_iter().map(Into::into).collect(),
            keyword: keyword.into(),
        });
        self
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn matches(&self, document: &Value) -> bool {
        self.predicates.iter().all(|p| p.matches(document))
    }
}

impl Predicate {
    pub fn matches(&self, document: &Value) -> bool {
        match self {
            Predicate::Equals { field, value } => lookup(document, field) == Some(value),
            Predicate::Contains { fields, keyword } => {
                let needle = keyword.to_lowercase();
                fields
                    .iter()
                    .filter_map(|f| lookup(document, f))
                    .any(|v| text_contains(v, &needle))
            }
        }
    }
}

fn lookup<'a>(document: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(document, |v, part| v.get(part))
}

fn text_contains(value: &Value, needle: &str) -> bool {
    match value {
        Value::String(s) => s.to_lowercase().contains(needle),
        Value::Array(items) => items.iter().any(|v| text_contains(v, needle)),
        _ => false,
    }
}
