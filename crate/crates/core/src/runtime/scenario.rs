//! Scenario documents: the simulated managed system, its requirements and the engine setup.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::domain::{
    is_identifier, Assignment, AttributeKind, AttributeSchema, SchemaSet, SystemState, Value,
};
use crate::engine::EngineConfig;
use crate::quality::{ExtendedState, MetricModel, UtilitySpec};
use crate::uncertainty::{UncertaintyDescriptor, UncertaintyModel};

use super::expr::{parse_expression, EvalError, Expr};

pub const WEBSERVICE_V1: &str = include_str!("../../scenarios/webservice-v1.toml");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    seed: u64,
    attributes: Vec<AttributeFile>,
    #[serde(default)]
    derived: Vec<DerivedFile>,
    utility: UtilitySpec,
    #[serde(default)]
    uncertainty: UncertaintyFile,
    environment: Vec<SegmentFile>,
    initial_controllables: Assignment,
    #[serde(default)]
    engine: EngineConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeFile {
    name: String,
    kind: AttributeKind,
    #[serde(default)]
    controllable: bool,
    similarity_weight: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DerivedFile {
    name: String,
    expression: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UncertaintyFile {
    #[serde(default)]
    descriptors: Vec<UncertaintyDescriptor>,
    #[serde(default = "default_samples")]
    sample_count: usize,
    #[serde(default = "default_lok_points")]
    lok_grid_points: usize,
    seed: Option<u64>,
}

impl Default for UncertaintyFile {
    fn default() -> Self {
        UncertaintyFile {
            descriptors: Vec::new(),
            sample_count: default_samples(),
            lok_grid_points: default_lok_points(),
            seed: None,
        }
    }
}

fn default_samples() -> usize {
    64
}

fn default_lok_points() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub attribute: String,
    pub amplitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    from_tick: u64,
    #[serde(default)]
    assignments: BTreeMap<String, Value>,
    #[serde(default)]
    noise: Vec<Noise>,
}

/// One step of the environment program, active from `from_tick` until the next segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub from_tick: u64,
    /// Environment values in force from this segment on (earlier assignments carried forward).
    pub values: BTreeMap<String, Value>,
    pub noise: Vec<Noise>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedMetric {
    pub name: String,
    pub expression: Expr,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub schema: SchemaSet,
    pub derived: Vec<DerivedMetric>,
    pub utility: UtilitySpec,
    pub uncertainty: UncertaintyModel,
    pub environment: Vec<Segment>,
    pub initial_controllables: Assignment,
    pub engine: EngineConfig,
    pub seed: u64,
    uncertainty_seed_explicit: bool,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn webservice_v1() -> Self {
        Self::from_toml_str(WEBSERVICE_V1).expect("bundled scenario is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        build(file)
    }

    /// Replaces the simulation seed; the sampling seed follows unless set explicitly.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if !self.uncertainty_seed_explicit {
            self.uncertainty.seed = seed;
        }
    }

    /// Segment in force at `tick`.
    pub fn segment_at(&self, tick: u64) -> Option<&Segment> {
        self.environment.iter().rev().find(|s| s.from_tick <= tick)
    }

    /// Raw attributes followed by derived metrics in declaration order.
    pub fn compute_metrics(&self, state: &SystemState) -> Result<ExtendedState, EvalError> {
        let mut ext = ExtendedState::from_state(&self.schema, state);
        for d in &self.derived {
            let v = d.expression.eval(&|n| ext.get(n))?;
            ext.insert(&d.name, v);
        }
        Ok(ext)
    }

    /// Initial controllables merged into the tick-0 environment, without noise.
    pub fn initial_state(&self) -> SystemState {
        let mut s = SystemState::new();
        if let Some(seg) = self.environment.first() {
            for (k, v) in &seg.values {
                s.set(k, v.clone());
            }
        }
        for (k, v) in self.initial_controllables.iter() {
            s.set(k, v.clone());
        }
        s
    }
}

impl MetricModel for Scenario {
    fn extend(&self, state: &SystemState) -> Result<ExtendedState, EvalError> {
        self.compute_metrics(state)
    }
}

fn build(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let mut problems = Vec::new();

    let attributes: Vec<AttributeSchema> = file
        .attributes
        .into_iter()
        .map(|a| AttributeSchema {
            similarity_weight: a.similarity_weight.unwrap_or(if a.controllable {
                0.0
            } else {
                1.0
            }),
            name: a.name,
            kind: a.kind,
            controllable: a.controllable,
        })
        .collect();
    if let Err(crate::domain::DomainError::InvalidSchema(p)) = SchemaSet::new(attributes.clone()) {
        problems.extend(p);
    }
    let schema = SchemaSet::unchecked(attributes);
    if !schema.has_controllable() {
        problems.push("no attribute is controllable".into());
    }
    if !schema
        .attributes()
        .iter()
        .any(|a| a.similarity_weight > 0.0)
    {
        problems.push("no attribute has a positive similarity weight".into());
    }

    let mut derived = Vec::new();
    let mut known: Vec<String> = schema.attributes().iter().map(|a| a.name.clone()).collect();
    for d in file.derived {
        if !is_identifier(&d.name) {
            problems.push(format!(
                "derived metric name {:?} is not a valid identifier",
                d.name
            ));
        }
        if schema.get(&d.name).is_some() {
            problems.push(format!("derived metric {} shadows an attribute", d.name));
        } else if known.contains(&d.name) {
            problems.push(format!("duplicate derived metric {}", d.name));
        }
        match parse_expression(&d.expression) {
            Ok(expr) => {
                for r in expr.references() {
                    if !known.iter().any(|k| k == r) {
                        problems.push(format!(
                            "derived metric {} references unknown or later-defined name {r}",
                            d.name
                        ));
                    }
                }
                derived.push(DerivedMetric {
                    name: d.name.clone(),
                    expression: expr,
                });
            }
            Err(e) => problems.push(format!("derived metric {}: {e}", d.name)),
        }
        known.push(d.name);
    }

    problems.extend(file.utility.problems());
    for t in &file.utility.terms {
        if !known.contains(&t.metric) {
            problems.push(format!(
                "utility term references unknown metric {}",
                t.metric
            ));
        }
    }

    let mut descriptors = BTreeMap::new();
    for d in file.uncertainty.descriptors {
        if descriptors.contains_key(&d.attribute) {
            problems.push(format!(
                "more than one uncertainty descriptor for {}",
                d.attribute
            ));
        }
        descriptors.insert(d.attribute.clone(), d);
    }
    let uncertainty = UncertaintyModel {
        descriptors,
        sample_count: file.uncertainty.sample_count,
        lok_grid_points: file.uncertainty.lok_grid_points,
        seed: file.uncertainty.seed.unwrap_or(file.seed),
    };
    problems.extend(uncertainty.problems(&schema));

    let environment = build_environment(&schema, file.environment, &mut problems);

    for v in schema.validate_solution(&file.initial_controllables) {
        problems.push(format!("initial_controllables: {v}"));
    }
    problems.extend(file.engine.problems());

    if !problems.is_empty() {
        return Err(ScenarioError::Invalid(problems));
    }
    Ok(Scenario {
        name: file.name,
        schema,
        derived,
        utility: file.utility,
        uncertainty,
        environment,
        initial_controllables: file.initial_controllables,
        engine: file.engine,
        seed: file.seed,
        uncertainty_seed_explicit: file.uncertainty.seed.is_some(),
    })
}

fn build_environment(
    schema: &SchemaSet,
    segments: Vec<SegmentFile>,
    problems: &mut Vec<String>,
) -> Vec<Segment> {
    let env_attrs: Vec<&AttributeSchema> = schema
        .attributes()
        .iter()
        .filter(|a| !a.controllable)
        .collect();
    if segments.first().map(|s| s.from_tick) != Some(0) {
        problems.push("environment program must start with a segment at tick 0".into());
    }
    let mut out: Vec<Segment> = Vec::new();
    let mut carried: BTreeMap<String, Value> = BTreeMap::new();
    for (i, seg) in segments.into_iter().enumerate() {
        if let Some(prev) = out.last() {
            if seg.from_tick <= prev.from_tick {
                problems.push(format!(
                    "environment segment {i} starts at tick {} which is not after the previous one",
                    seg.from_tick
                ));
            }
        }
        for (name, value) in &seg.assignments {
            match schema.get(name) {
                None => problems.push(format!("environment assigns unknown attribute {name}")),
                Some(a) if a.controllable => {
                    problems.push(format!("environment assigns controllable attribute {name}"))
                }
                Some(a) => {
                    if let Some(kind) = a.check_value(value) {
                        let v = crate::domain::Violation {
                            attribute: name.clone(),
                            kind,
                        };
                        problems.push(format!("environment segment {i}: {v}"));
                    }
                }
            }
            carried.insert(name.clone(), value.clone());
        }
        if i == 0 {
            for a in &env_attrs {
                if !carried.contains_key(&a.name) {
                    problems.push(format!("environment at tick 0 does not assign {}", a.name));
                }
            }
        }
        for n in &seg.noise {
            match schema.get(&n.attribute) {
                Some(a) if a.is_numeric() && !a.controllable => {}
                _ => problems.push(format!(
                    "noise on {} needs a numeric environment attribute",
                    n.attribute
                )),
            }
            if !(n.amplitude >= 0.0 && n.amplitude.is_finite()) {
                problems.push(format!("noise amplitude on {} must be >= 0", n.attribute));
            }
        }
        out.push(Segment {
            from_tick: seg.from_tick,
            values: carried.clone(),
            noise: seg.noise,
        });
    }
    out
}
