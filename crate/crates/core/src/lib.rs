//! Case-based self-adaptation engine.
//!
//! A managed system exposes a typed set of attributes. When its utility under
//! run-time uncertainty drops below (or close to) a threshold, the engine
//! answers with a corrective assignment of the controllable attributes, reusing
//! a stored case when a similar enough one exists and otherwise searching for a
//! new one and remembering it.

pub mod domain;
pub mod engine;
pub mod quality;
pub mod runtime;
pub mod uncertainty;

pub use domain::{
    AdaptationRequest, AdaptationResponse, Assignment, AttributeKind, AttributeSchema, Case,
    CaseId, KnowledgeBase, Provenance, SchemaSet, SystemState, Value,
};
pub use engine::{CbrEngine, EngineConfig, EngineError, Objective};
pub use runtime::{run_loop, RunOptions, Scenario, TickRecord};
