//! Case storage and its on-disk document format.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::schema::{Assignment, Fingerprint, SchemaSet, SystemState};

pub const KB_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseId(pub u64);

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Untested,
    Confirmed,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseSource {
    Constructed,
    Seeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    pub status: CaseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_utility: Option<f64>,
}

impl Outcome {
    pub fn untested() -> Self {
        Outcome {
            status: CaseStatus::Untested,
            realized_utility: None,
        }
    }
}

/// A stored adaptation: observed context, the controllable assignment applied, and how it went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub id: CaseId,
    pub problem: SystemState,
    pub solution: Assignment,
    pub predicted_utility: f64,
    pub outcome: Outcome,
    pub source: CaseSource,
    pub use_count: u64,
}

/// A case before the knowledge base assigns it an id.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseDraft {
    pub problem: SystemState,
    pub solution: Assignment,
    pub predicted_utility: f64,
    pub outcome: Outcome,
    pub source: CaseSource,
    pub use_count: u64,
}

impl CaseDraft {
    fn with_id(self, id: CaseId) -> Case {
        Case {
            id,
            problem: self.problem,
            solution: self.solution,
            predicted_utility: self.predicted_utility,
            outcome: self.outcome,
            source: self.source,
            use_count: self.use_count,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum KbError {
    #[error("schema fingerprint mismatch: knowledge base has {kb}, schema has {schema}")]
    FingerprintMismatch {
        kb: Fingerprint,
        schema: Fingerprint,
    },
    #[error("unsupported knowledge base version {found} (expected {KB_VERSION})")]
    VersionMismatch { found: String },
    #[error("malformed knowledge base document: {0}")]
    Malformed(String),
    #[error("case {} does not conform to the schema: {reason}", id.map_or("<new>".to_string(), |i| i.to_string()))]
    InvalidCase { id: Option<CaseId>, reason: String },
    #[error("no case with id {0}")]
    NotFound(CaseId),
}

/// Deduplication-free case store bound to one schema fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    schema_fingerprint: Fingerprint,
    cases: BTreeMap<CaseId, Case>,
    next_id: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KbDocument {
    version: u64,
    schema_fingerprint: Fingerprint,
    next_id: u64,
    cases: Vec<Case>,
}

impl KnowledgeBase {
    pub fn new(schema: &SchemaSet) -> Self {
        KnowledgeBase {
            schema_fingerprint: schema.fingerprint(),
            cases: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.schema_fingerprint
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Cases in ascending id order.
    pub fn cases(&self) -> impl Iterator<Item = &Case> {
        self.cases.values()
    }

    pub fn get(&self, id: CaseId) -> Option<&Case> {
        self.cases.get(&id)
    }

    pub fn get_mut(&mut self, id: CaseId) -> Option<&mut Case> {
        self.cases.get_mut(&id)
    }

    pub fn check_schema(&self, schema: &SchemaSet) -> Result<(), KbError> {
        let fp = schema.fingerprint();
        if fp != self.schema_fingerprint {
            return Err(KbError::FingerprintMismatch {
                kb: self.schema_fingerprint.clone(),
                schema: fp,
            });
        }
        Ok(())
    }

    /// Stores `draft` under the next id and returns that id.
    pub fn insert(&mut self, schema: &SchemaSet, draft: CaseDraft) -> Result<CaseId, KbError> {
        self.check_schema(schema)?;
        check_case_parts(
            schema,
            &draft.problem,
            &draft.solution,
            draft.predicted_utility,
            &draft.outcome,
        )
        .map_err(|reason| KbError::InvalidCase { id: None, reason })?;
        let id = CaseId(self.next_id);
        self.next_id += 1;
        self.cases.insert(id, draft.with_id(id));
        Ok(id)
    }

    /// Pretty-printed JSON with sorted keys, cases ascending by id, trailing newline.
    pub fn to_json(&self) -> String {
        let doc = KbDocument {
            version: KB_VERSION,
            schema_fingerprint: self.schema_fingerprint.clone(),
            next_id: self.next_id,
            cases: self.cases.values().cloned().collect(),
        };
        // Round-tripping through `serde_json::Value` sorts every object's keys.
        let value = serde_json::to_value(&doc).expect("knowledge base serializes");
        let mut text = serde_json::to_string_pretty(&value).expect("json value prints");
        text.push('\n');
        text
    }

    /// Parses a knowledge base document. With `schema`, the fingerprint and every case are
    /// checked against it.
    pub fn from_json(text: &str, schema: Option<&SchemaSet>) -> Result<Self, KbError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| KbError::Malformed(e.to_string()))?;
        let version = value
            .get("version")
            .ok_or_else(|| KbError::Malformed("missing version field".into()))?;
        if version.as_u64() != Some(KB_VERSION) {
            return Err(KbError::VersionMismatch {
                found: version.to_string(),
            });
        }
        let doc: KbDocument =
            serde_json::from_value(value).map_err(|e| KbError::Malformed(e.to_string()))?;

        let mut cases = BTreeMap::new();
        for case in doc.cases {
            if case.id.0 >= doc.next_id {
                return Err(KbError::Malformed(format!(
                    "case id {} not below next_id {}",
                    case.id, doc.next_id
                )));
            }
            if let Some(prev) = cases.insert(case.id, case) {
                return Err(KbError::Malformed(format!("duplicate case id {}", prev.id)));
            }
        }
        let kb = KnowledgeBase {
            schema_fingerprint: doc.schema_fingerprint,
            cases,
            next_id: doc.next_id,
        };
        if let Some(schema) = schema {
            kb.check_schema(schema)?;
            for case in kb.cases.values() {
                check_case_parts(
                    schema,
                    &case.problem,
                    &case.solution,
                    case.predicted_utility,
                    &case.outcome,
                )
                .map_err(|reason| KbError::InvalidCase {
                    id: Some(case.id),
                    reason,
                })?;
            }
        }
        Ok(kb)
    }
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn check_case_parts(
    schema: &SchemaSet,
    problem: &SystemState,
    solution: &Assignment,
    predicted_utility: f64,
    outcome: &Outcome,
) -> Result<(), String> {
    let mut problems: Vec<String> = schema
        .validate_state(problem)
        .iter()
        .map(|v| format!("problem: {v}"))
        .collect();
    problems.extend(
        schema
            .validate_solution(solution)
            .iter()
            .map(|v| format!("solution: {v}")),
    );
    if !in_unit(predicted_utility) {
        problems.push(format!(
            "predicted_utility {predicted_utility} outside [0, 1]"
        ));
    }
    if let Some(r) = outcome.realized_utility {
        if !in_unit(r) {
            problems.push(format!("realized_utility {r} outside [0, 1]"));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems.join("; "))
    }
}
