use crate::domain::{AttributeKind, AttributeSchema, SchemaSet, SystemState, Value};

use super::QualityError;

/// Per-attribute similarity in `[0, 1]`: range-normalized distance for numeric
/// attributes, exact match for categorical ones.
pub fn local_similarity(attr: &AttributeSchema, a: &Value, b: &Value) -> Result<f64, QualityError> {
    let nonconforming = || QualityError::NonConforming {
        attribute: attr.name.clone(),
    };
    if attr.check_value(a).is_some() || attr.check_value(b).is_some() {
        return Err(nonconforming());
    }
    match (&attr.kind, a, b) {
        (AttributeKind::Numeric { min, max, .. }, Value::Num(x), Value::Num(y)) => {
            Ok((1.0 - (x - y).abs() / (max - min)).clamp(0.0, 1.0))
        }
        (AttributeKind::Categorical { .. }, Value::Label(x), Value::Label(y)) => {
            Ok(if x == y { 1.0 } else { 0.0 })
        }
        _ => Err(nonconforming()),
    }
}

/// Weighted nearest-neighbour similarity over the attributes with positive weight.
#[derive(Debug, Clone)]
pub struct SimilarityConfig {
    terms: Vec<(AttributeSchema, f64)>,
    total: f64,
}

impl SimilarityConfig {
    pub fn from_schema(schema: &SchemaSet) -> Result<Self, QualityError> {
        let terms: Vec<(AttributeSchema, f64)> = schema
            .attributes()
            .iter()
            .filter(|a| a.similarity_weight > 0.0)
            .map(|a| (a.clone(), a.similarity_weight))
            .collect();
        if terms.is_empty() {
            return Err(QualityError::NoPositiveWeight);
        }
        let total = terms.iter().map(|(_, w)| w).sum();
        Ok(SimilarityConfig { terms, total })
    }

    /// Normalized weights, in schema order.
    pub fn weights(&self) -> impl Iterator<Item = (&str, f64)> {
        self.terms
            .iter()
            .map(|(a, w)| (a.name.as_str(), w / self.total))
    }

    pub fn similarity(&self, a: &SystemState, b: &SystemState) -> Result<f64, QualityError> {
        let mut acc = 0.0;
        for (attr, w) in &self.terms {
            let va = a
                .get(&attr.name)
                .ok_or_else(|| QualityError::MissingAttribute(attr.name.clone()))?;
            let vb = b
                .get(&attr.name)
                .ok_or_else(|| QualityError::MissingAttribute(attr.name.clone()))?;
            acc += w * local_similarity(attr, va, vb)?;
        }
        // Dividing by the raw total keeps sim(a, a) exactly 1.
        Ok(acc / self.total)
    }
}
