//! Run-time uncertainty along three dimensions (location, level, nature) and
//! utility evaluation under it.
//!
//! Level maps linearly onto a perturbation interval around the observed value:
//! level 0 collapses the interval to the value itself, level 1 spans the whole
//! attribute range. Variability is averaged out by seeded Monte Carlo sampling,
//! lack of knowledge is resolved pessimistically by taking the worst case over a
//! small grid.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AttributeSchema, SchemaSet, SystemState, Value};
use crate::quality::{MetricModel, QualityError, UtilitySpec};
use crate::runtime::expr::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Monitoring,
    Environment,
    InternalModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nature {
    Variability,
    LackOfKnowledge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyDescriptor {
    pub attribute: String,
    /// Recorded for reporting only.
    pub location: Location,
    pub level: f64,
    pub nature: Nature,
}

#[derive(Debug, Error, PartialEq)]
pub enum UncertaintyError {
    #[error("uncertainty on categorical attribute {0} is not supported")]
    Unsupported(String),
    #[error("value {value} of {attribute} is outside its range")]
    OutOfRange { attribute: String, value: f64 },
    #[error("at least 2 observations are needed, got {0}")]
    InsufficientData(usize),
    #[error("invalid uncertainty model: {0}")]
    InvalidModel(String),
    #[error("state lacks uncertain attribute {0}")]
    MissingAttribute(String),
    #[error(transparent)]
    Metric(#[from] EvalError),
    #[error(transparent)]
    Quality(#[from] QualityError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyModel {
    pub descriptors: BTreeMap<String, UncertaintyDescriptor>,
    /// Monte Carlo samples per lack-of-knowledge grid assignment.
    pub sample_count: usize,
    pub lok_grid_points: usize,
    pub seed: u64,
}

impl Default for UncertaintyModel {
    fn default() -> Self {
        UncertaintyModel {
            descriptors: BTreeMap::new(),
            sample_count: 64,
            lok_grid_points: 3,
            seed: 0,
        }
    }
}

impl UncertaintyModel {
    pub fn new(seed: u64) -> Self {
        UncertaintyModel {
            seed,
            ..Self::default()
        }
    }

    pub fn with(mut self, attribute: &str, location: Location, level: f64, nature: Nature) -> Self {
        self.descriptors.insert(
            attribute.to_owned(),
            UncertaintyDescriptor {
                attribute: attribute.to_owned(),
                location,
                level,
                nature,
            },
        );
        self
    }

    pub fn problems(&self, schema: &SchemaSet) -> Vec<String> {
        let mut out = Vec::new();
        if self.sample_count < 1 {
            out.push("sample_count must be >= 1".to_owned());
        }
        if self.lok_grid_points < 2 {
            out.push("lok_grid_points must be >= 2".to_owned());
        }
        for (name, d) in &self.descriptors {
            if &d.attribute != name {
                out.push(format!(
                    "descriptor key {name} names attribute {}",
                    d.attribute
                ));
            }
            if !(0.0..=1.0).contains(&d.level) {
                out.push(format!("uncertainty level of {name} must lie in [0, 1]"));
            }
            match schema.get(name) {
                None => out.push(format!("uncertainty on unknown attribute {name}")),
                Some(a) if !a.is_numeric() => out.push(format!(
                    "uncertainty on categorical attribute {name} is not supported"
                )),
                Some(_) => {}
            }
        }
        out
    }

    pub fn validate(&self, schema: &SchemaSet) -> Result<(), UncertaintyError> {
        let p = self.problems(schema);
        if p.is_empty() {
            Ok(())
        } else {
            Err(UncertaintyError::InvalidModel(p.join("; ")))
        }
    }
}

/// Interval `[value - h, value + h]` clipped to the attribute range, `h = level * (max - min) / 2`.
pub fn perturbation_interval(
    descriptor: &UncertaintyDescriptor,
    attr: &AttributeSchema,
    value: f64,
) -> Result<(f64, f64), UncertaintyError> {
    let (min, max) = attr
        .range()
        .ok_or_else(|| UncertaintyError::Unsupported(attr.name.clone()))?;
    if !(min..=max).contains(&value) {
        return Err(UncertaintyError::OutOfRange {
            attribute: attr.name.clone(),
            value,
        });
    }
    let h = descriptor.level * (max - min) / 2.0;
    Ok(((value - h).max(min), (value + h).min(max)))
}

pub(crate) fn sub_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Utility of `state` aggregated over the uncertainty model.
///
/// Lack-of-knowledge attributes span a tensor grid of `lok_grid_points` values per
/// interval; for each grid assignment the utility is averaged over `sample_count`
/// joint uniform draws of the variability attributes, and the minimum over the
/// grid is returned. Attributes with a degenerate interval are treated as exact.
pub fn expected_utility(
    spec: &UtilitySpec,
    metrics: &dyn MetricModel,
    schema: &SchemaSet,
    state: &SystemState,
    model: &UncertaintyModel,
) -> Result<f64, UncertaintyError> {
    let mut lok: Vec<(&str, f64, f64)> = Vec::new();
    let mut var: Vec<(&str, f64, f64)> = Vec::new();
    for attr in schema.attributes() {
        let Some(desc) = model.descriptors.get(&attr.name) else {
            continue;
        };
        let value = state
            .get(&attr.name)
            .and_then(Value::as_num)
            .ok_or_else(|| UncertaintyError::MissingAttribute(attr.name.clone()))?;
        let (lo, hi) = perturbation_interval(desc, attr, value)?;
        if lo == hi {
            continue;
        }
        match desc.nature {
            Nature::Variability => var.push((&attr.name, lo, hi)),
            Nature::LackOfKnowledge => lok.push((&attr.name, lo, hi)),
        }
    }

    let exact = |s: &SystemState| -> Result<f64, UncertaintyError> {
        Ok(spec.utility(&metrics.extend(s)?)?)
    };
    if lok.is_empty() && var.is_empty() {
        return exact(state);
    }

    let points = model.lok_grid_points.max(2);
    let grid_size = lok.iter().fold(1usize, |n, _| n * points);
    let mut worst = f64::INFINITY;
    let mut probe = state.clone();
    for g in 0..grid_size {
        let mut rest = g;
        for &(name, lo, hi) in &lok {
            let k = rest % points;
            rest /= points;
            let x = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            probe.set(name, x);
        }
        let avg = if var.is_empty() {
            exact(&probe)?
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(model.seed, g as u64));
            let n = model.sample_count.max(1);
            let mut sum = 0.0;
            for _ in 0..n {
                for &(name, lo, hi) in &var {
                    let u: f64 = rng.gen();
                    probe.set(name, lo + (hi - lo) * u);
                }
                sum += exact(&probe)?;
            }
            sum / n as f64
        };
        worst = worst.min(avg);
    }
    Ok(worst)
}

/// Uncertainty level implied by a window of observations: `clamp(4 * stddev / (max - min), 0, 1)`
/// with the population standard deviation.
pub fn quantify_level_from_trace(
    window: &[f64],
    attr: &AttributeSchema,
) -> Result<f64, UncertaintyError> {
    if window.len() < 2 {
        return Err(UncertaintyError::InsufficientData(window.len()));
    }
    let (min, max) = attr
        .range()
        .ok_or_else(|| UncertaintyError::Unsupported(attr.name.clone()))?;
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok((4.0 * var.sqrt() / (max - min)).clamp(0.0, 1.0))
}
