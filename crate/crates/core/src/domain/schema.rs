//! Attribute schema of the managed system and validation of states against it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DomainError;

/// A single attribute value: a real for numeric attributes, a label for categorical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Label(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Label(s.to_owned())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Label(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttributeKind {
    Numeric {
        min: f64,
        max: f64,
        #[serde(default)]
        integer_valued: bool,
        #[serde(default)]
        unit: String,
    },
    Categorical {
        allowed: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    pub controllable: bool,
    pub similarity_weight: f64,
}

impl AttributeSchema {
    pub fn numeric(name: &str, min: f64, max: f64) -> Self {
        AttributeSchema {
            name: name.to_owned(),
            kind: AttributeKind::Numeric {
                min,
                max,
                integer_valued: false,
                unit: String::new(),
            },
            controllable: false,
            similarity_weight: 1.0,
        }
    }

    pub fn categorical(name: &str, allowed: &[&str]) -> Self {
        AttributeSchema {
            name: name.to_owned(),
            kind: AttributeKind::Categorical {
                allowed: allowed.iter().map(|s| (*s).to_owned()).collect(),
            },
            controllable: false,
            similarity_weight: 1.0,
        }
    }

    /// Marks the attribute controllable and zeroes its similarity weight.
    pub fn controllable(mut self) -> Self {
        self.controllable = true;
        self.similarity_weight = 0.0;
        self
    }

    pub fn integer(mut self) -> Self {
        if let AttributeKind::Numeric { integer_valued, .. } = &mut self.kind {
            *integer_valued = true;
        }
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.similarity_weight = weight;
        self
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric { .. })
    }

    /// `(min, max)` for numeric attributes.
    pub fn range(&self) -> Option<(f64, f64)> {
        match self.kind {
            AttributeKind::Numeric { min, max, .. } => Some((min, max)),
            AttributeKind::Categorical { .. } => None,
        }
    }

    /// Checks a single value against this attribute; `None` when it conforms.
    pub fn check_value(&self, value: &Value) -> Option<ViolationKind> {
        match (&self.kind, value) {
            (
                AttributeKind::Numeric {
                    min,
                    max,
                    integer_valued,
                    ..
                },
                Value::Num(x),
            ) => {
                if !x.is_finite() {
                    Some(ViolationKind::NotFinite)
                } else if *x < *min || *x > *max {
                    Some(ViolationKind::OutOfRange {
                        min: *min,
                        max: *max,
                        value: *x,
                    })
                } else if *integer_valued && x.fract() != 0.0 {
                    Some(ViolationKind::NotInteger { value: *x })
                } else {
                    None
                }
            }
            (AttributeKind::Categorical { allowed }, Value::Label(l)) => {
                if allowed.iter().any(|a| a == l) {
                    None
                } else {
                    Some(ViolationKind::LabelNotAllowed { label: l.clone() })
                }
            }
            (AttributeKind::Numeric { .. }, Value::Label(_)) => {
                Some(ViolationKind::WrongType { expected: "number" })
            }
            (AttributeKind::Categorical { .. }, Value::Num(_)) => {
                Some(ViolationKind::WrongType { expected: "label" })
            }
        }
    }

    /// Numeric encoding used by metric evaluation: the value itself for numeric
    /// attributes, the ordinal position in `allowed` for categorical ones.
    pub fn encode(&self, value: &Value) -> Option<f64> {
        match (&self.kind, value) {
            (AttributeKind::Numeric { .. }, Value::Num(x)) => Some(*x),
            (AttributeKind::Categorical { allowed }, Value::Label(l)) => {
                allowed.iter().position(|a| a == l).map(|i| i as f64)
            }
            _ => None,
        }
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    UnknownAttribute,
    Missing,
    OutOfRange { min: f64, max: f64, value: f64 },
    NotInteger { value: f64 },
    NotFinite,
    LabelNotAllowed { label: String },
    WrongType { expected: &'static str },
    NotControllable,
}

/// One broken rule for one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub attribute: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.attribute;
        match &self.kind {
            ViolationKind::UnknownAttribute => write!(f, "unknown attribute {a}"),
            ViolationKind::Missing => write!(f, "missing attribute {a}"),
            ViolationKind::OutOfRange { min, max, value } => {
                write!(f, "{a} out of range [{min}, {max}]: {value}")
            }
            ViolationKind::NotInteger { value } => write!(f, "{a} must be integer-valued: {value}"),
            ViolationKind::NotFinite => write!(f, "{a} is not finite"),
            ViolationKind::LabelNotAllowed { label } => {
                write!(f, "{a} has label {label:?} outside its allowed set")
            }
            ViolationKind::WrongType { expected } => write!(f, "{a} expects a {expected}"),
            ViolationKind::NotControllable => write!(f, "{a} is not controllable"),
        }
    }
}

/// Full snapshot of attribute values, keyed by attribute name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SystemState(pub BTreeMap<String, Value>);

impl SystemState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.0.insert(name.to_owned(), value.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn num(&self, name: &str) -> Option<f64> {
        self.0.get(name).and_then(Value::as_num)
    }

    pub fn set(&mut self, name: &str, value: impl Into<Value>) {
        self.0.insert(name.to_owned(), value.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }
}

/// Partial assignment over controllable attributes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub BTreeMap<String, Value>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.0.insert(name.to_owned(), value.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn set(&mut self, name: &str, value: impl Into<Value>) {
        self.0.insert(name.to_owned(), value.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Hex digest identifying a schema set independently of attribute order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fingerprint(pub String);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered, validated set of attribute schemas.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaSet {
    attributes: Vec<AttributeSchema>,
}

impl SchemaSet {
    pub fn new(attributes: Vec<AttributeSchema>) -> Result<Self, DomainError> {
        let problems = schema_problems(&attributes);
        if !problems.is_empty() {
            return Err(DomainError::InvalidSchema(problems));
        }
        Ok(SchemaSet { attributes })
    }

    /// Skips validation; callers report problems themselves.
    pub(crate) fn unchecked(attributes: Vec<AttributeSchema>) -> Self {
        SchemaSet { attributes }
    }

    pub fn attributes(&self) -> &[AttributeSchema] {
        &self.attributes
    }

    pub fn get(&self, name: &str) -> Option<&AttributeSchema> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn controllables(&self) -> impl Iterator<Item = &AttributeSchema> {
        self.attributes.iter().filter(|a| a.controllable)
    }

    pub fn has_controllable(&self) -> bool {
        self.attributes.iter().any(|a| a.controllable)
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut sorted: Vec<&AttributeSchema> = self.attributes.iter().collect();
        sorted.sort_by(|a, b| a.name.cmp(&b.name));
        // serde_json::Value objects keep keys sorted, which makes this canonical.
        let canonical = serde_json::to_value(&sorted).expect("schema serializes");
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        Fingerprint(hex::encode(digest))
    }

    /// All violations of `state` against this schema; empty means valid.
    pub fn validate_state(&self, state: &SystemState) -> Vec<Violation> {
        let mut out = Vec::new();
        for attr in &self.attributes {
            match state.get(&attr.name) {
                None => out.push(Violation {
                    attribute: attr.name.clone(),
                    kind: ViolationKind::Missing,
                }),
                Some(v) => {
                    if let Some(kind) = attr.check_value(v) {
                        out.push(Violation {
                            attribute: attr.name.clone(),
                            kind,
                        });
                    }
                }
            }
        }
        for name in state.0.keys() {
            if self.get(name).is_none() {
                out.push(Violation {
                    attribute: name.clone(),
                    kind: ViolationKind::UnknownAttribute,
                });
            }
        }
        out
    }

    /// Violations of a solution: it must assign every controllable attribute and nothing else.
    pub fn validate_solution(&self, solution: &Assignment) -> Vec<Violation> {
        let mut out = Vec::new();
        for attr in self.controllables() {
            match solution.get(&attr.name) {
                None => out.push(Violation {
                    attribute: attr.name.clone(),
                    kind: ViolationKind::Missing,
                }),
                Some(v) => {
                    if let Some(kind) = attr.check_value(v) {
                        out.push(Violation {
                            attribute: attr.name.clone(),
                            kind,
                        });
                    }
                }
            }
        }
        for name in solution.0.keys() {
            match self.get(name) {
                None => out.push(Violation {
                    attribute: name.clone(),
                    kind: ViolationKind::UnknownAttribute,
                }),
                Some(a) if !a.controllable => out.push(Violation {
                    attribute: name.clone(),
                    kind: ViolationKind::NotControllable,
                }),
                Some(_) => {}
            }
        }
        out
    }

    /// The controllable part of a state.
    pub fn controllable_part(&self, state: &SystemState) -> Assignment {
        Assignment(
            self.controllables()
                .filter_map(|a| state.get(&a.name).map(|v| (a.name.clone(), v.clone())))
                .collect(),
        )
    }

    /// Replaces controllable values of `state` with those in `solution`.
    pub fn merge_solution(
        &self,
        state: &SystemState,
        solution: &Assignment,
    ) -> Result<SystemState, DomainError> {
        let mut merged = state.clone();
        for (name, value) in solution.iter() {
            let attr = self
                .get(name)
                .ok_or_else(|| DomainError::ContractViolation {
                    attribute: name.clone(),
                    reason: "unknown attribute in solution".into(),
                })?;
            if !attr.controllable {
                return Err(DomainError::ContractViolation {
                    attribute: name.clone(),
                    reason: "solution assigns a non-controllable attribute".into(),
                });
            }
            if let Some(kind) = attr.check_value(value) {
                return Err(DomainError::ContractViolation {
                    attribute: name.clone(),
                    reason: Violation {
                        attribute: name.clone(),
                        kind,
                    }
                    .to_string(),
                });
            }
            merged.0.insert(name.clone(), value.clone());
        }
        Ok(merged)
    }
}

fn schema_problems(attributes: &[AttributeSchema]) -> Vec<String> {
    let mut problems = Vec::new();
    for (i, attr) in attributes.iter().enumerate() {
        let name = &attr.name;
        if !is_identifier(name) {
            problems.push(format!("attribute name {name:?} is not a valid identifier"));
        }
        if attributes[..i].iter().any(|a| &a.name == name) {
            problems.push(format!("duplicate attribute name {name}"));
        }
        if !(attr.similarity_weight >= 0.0 && attr.similarity_weight.is_finite()) {
            problems.push(format!("{name}: similarity_weight must be finite and >= 0"));
        }
        match &attr.kind {
            AttributeKind::Numeric {
                min,
                max,
                integer_valued,
                ..
            } => {
                if !(min.is_finite() && max.is_finite() && min < max) {
                    problems.push(format!("{name}: numeric range requires min < max"));
                }
                if *integer_valued && (min.fract() != 0.0 || max.fract() != 0.0) {
                    problems.push(format!("{name}: integer-valued range needs integer bounds"));
                }
            }
            AttributeKind::Categorical { allowed } => {
                if allowed.is_empty() {
                    problems.push(format!("{name}: categorical allowed set is empty"));
                }
                for (j, label) in allowed.iter().enumerate() {
                    if allowed[..j].contains(label) {
                        problems.push(format!("{name}: duplicate label {label:?}"));
                    }
                }
            }
        }
    }
    problems
}
