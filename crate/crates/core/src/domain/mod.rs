//! Attribute space, cases and the knowledge base.

mod kb;
mod schema;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kb::{
    Case, CaseDraft, CaseId, CaseSource, CaseStatus, KbError, KnowledgeBase, Outcome, KB_VERSION,
};
pub(crate) use schema::is_identifier;
pub use schema::{
    Assignment, AttributeKind, AttributeSchema, Fingerprint, SchemaSet, SystemState, Value,
    Violation, ViolationKind,
};

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("invalid schema: {}", .0.join("; "))]
    InvalidSchema(Vec<String>),
    #[error("contract violation on {attribute}: {reason}")]
    ContractViolation { attribute: String, reason: String },
}

/// Snapshot sent to the engine when the monitored utility breaks or approaches the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptationRequest {
    pub state: SystemState,
    pub trigger_utility: f64,
    pub tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "case_id", rename_all = "snake_case")]
pub enum Provenance {
    Reused(CaseId),
    Constructed(CaseId),
}

impl Provenance {
    pub fn case_id(&self) -> CaseId {
        match self {
            Provenance::Reused(id) | Provenance::Constructed(id) => *id,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Reused(_) => "reused",
            Provenance::Constructed(_) => "constructed",
        }
    }
}

/// Corrective assignment returned by the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationResponse {
    pub solution: Assignment,
    pub predicted_utility: f64,
    pub provenance: Provenance,
    /// Whether the predicted utility strictly exceeds the threshold.
    pub threshold_met: bool,
    /// Utility evaluations spent producing the response.
    pub eval_count: u64,
    pub elapsed: Duration,
}
