//! Similarity between states and utility of states.

mod similarity;
mod utility;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{SchemaSet, SystemState};
use crate::runtime::expr::EvalError;

pub use similarity::{local_similarity, SimilarityConfig};
pub use utility::{
    curve_eval, threshold_check, Classification, HighSide, UtilityCurve, UtilitySpec, UtilityTerm,
};

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error("no attribute has a positive similarity weight")]
    NoPositiveWeight,
    #[error("value of {attribute} does not conform to its schema")]
    NonConforming { attribute: String },
    #[error("state lacks attribute {0}")]
    MissingAttribute(String),
    #[error("extended state lacks metric {0}")]
    MissingMetric(String),
    #[error("invalid utility specification: {0}")]
    InvalidSpec(String),
}

/// Raw attributes plus derived metrics, all as reals.
///
/// Categorical attributes appear as their ordinal position in the allowed set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtendedState {
    values: BTreeMap<String, f64>,
    order: Vec<String>,
}

impl ExtendedState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Encodes every attribute of `state` that the schema knows about, in schema order.
    pub fn from_state(schema: &SchemaSet, state: &SystemState) -> Self {
        let mut ext = ExtendedState::new();
        for attr in schema.attributes() {
            if let Some(x) = state.get(&attr.name).and_then(|v| attr.encode(v)) {
                ext.insert(&attr.name, x);
            }
        }
        ext
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        if self.values.insert(name.to_owned(), value).is_none() {
            self.order.push(name.to_owned());
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.insert(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Entries in insertion (declaration) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.order.iter().map(|n| (n.as_str(), self.values[n]))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Maps an observed state to its extended state (raw attributes plus derived metrics).
pub trait MetricModel {
    fn extend(&self, state: &SystemState) -> Result<ExtendedState, EvalError>;
}

impl<F> MetricModel for F
where
    F: Fn(&SystemState) -> Result<ExtendedState, EvalError>,
{
    fn extend(&self, state: &SystemState) -> Result<ExtendedState, EvalError> {
        self(state)
    }
}

/// Metric model with no derived metrics.
#[derive(Debug, Clone)]
pub struct RawMetrics<'a>(pub &'a SchemaSet);

impl MetricModel for RawMetrics<'_> {
    fn extend(&self, state: &SystemState) -> Result<ExtendedState, EvalError> {
        Ok(ExtendedState::from_state(self.0, state))
    }
}
