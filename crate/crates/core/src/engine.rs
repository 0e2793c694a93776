//! Case-based adaptation engine.
//!
//! `adapt` retrieves every usable case ranked by similarity to the request,
//! keeps those at or above the similarity gate (the qualified adaptation frame),
//! and reuses the one with the highest case expediency. When no case qualifies it
//! constructs a solution by coordinate ascent on expected utility and retains it.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    AdaptationRequest, AdaptationResponse, Assignment, AttributeKind, AttributeSchema, CaseDraft,
    CaseId, CaseSource, CaseStatus, DomainError, KbError, KnowledgeBase, Outcome, Provenance,
    SchemaSet, SystemState, Value,
};
use crate::quality::{MetricModel, QualityError, SimilarityConfig, UtilitySpec};
use crate::uncertainty::{expected_utility, UncertaintyError, UncertaintyModel};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("schema has no controllable attribute")]
    NoControllables,
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid adaptation request: {0}")]
    InvalidRequest(String),
    #[error("qualified adaptation frame is empty")]
    EmptyQaf,
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Minimum similarity for a case to enter the qualified adaptation frame.
    #[serde(alias = "beta", default = "defaults::qaf_threshold")]
    pub qaf_threshold: f64,
    /// Weight of similarity against expected utility in case expediency.
    #[serde(alias = "alpha", default = "defaults::expediency_blend")]
    pub expediency_blend: f64,
    /// Similarity at which a constructed case may be merged into an existing one.
    #[serde(alias = "gamma", default = "defaults::dedup_threshold")]
    pub dedup_threshold: f64,
    #[serde(default = "defaults::grid_points")]
    pub grid_points_per_numeric: usize,
    #[serde(default = "defaults::max_passes")]
    pub max_passes: usize,
    #[serde(default = "defaults::yes")]
    pub satisficing: bool,
    #[serde(default = "defaults::yes")]
    pub exclude_failed: bool,
}

mod defaults {
    pub fn qaf_threshold() -> f64 {
        0.8
    }
    pub fn expediency_blend() -> f64 {
        0.5
    }
    pub fn dedup_threshold() -> f64 {
        0.98
    }
    pub fn grid_points() -> usize {
        17
    }
    pub fn max_passes() -> usize {
        10
    }
    pub fn yes() -> bool {
        true
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            qaf_threshold: defaults::qaf_threshold(),
            expediency_blend: defaults::expediency_blend(),
            dedup_threshold: defaults::dedup_threshold(),
            grid_points_per_numeric: defaults::grid_points(),
            max_passes: defaults::max_passes(),
            satisficing: true,
            exclude_failed: true,
        }
    }
}

impl EngineConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, x) in [
            ("qaf_threshold", self.qaf_threshold),
            ("expediency_blend", self.expediency_blend),
            ("dedup_threshold", self.dedup_threshold),
        ] {
            if !(0.0..=1.0).contains(&x) {
                out.push(format!("{name} must lie in [0, 1]"));
            }
        }
        if self.grid_points_per_numeric < 1 {
            out.push("grid_points_per_numeric must be >= 1".into());
        }
        if self.max_passes < 1 {
            out.push("max_passes must be >= 1".into());
        }
        out
    }
}

/// Everything needed to score a candidate state.
#[derive(Clone, Copy)]
pub struct Objective<'a> {
    pub schema: &'a SchemaSet,
    pub utility: &'a UtilitySpec,
    pub metrics: &'a dyn MetricModel,
    pub uncertainty: &'a UncertaintyModel,
}

impl Objective<'_> {
    pub fn expected_utility(&self, state: &SystemState) -> Result<f64, EngineError> {
        Ok(expected_utility(
            self.utility,
            self.metrics,
            self.schema,
            state,
            self.uncertainty,
        )?)
    }
}

/// A retrieved case with the similarity of its problem part to the request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedCase {
    pub id: CaseId,
    pub sim: f64,
}

/// Keeps the cases with `sim >= gate`, preserving order.
pub fn build_qaf(ranked: &[RankedCase], gate: f64) -> Vec<RankedCase> {
    ranked.iter().filter(|r| r.sim >= gate).copied().collect()
}

/// `blend * sim + (1 - blend) * expected_utility`.
pub fn blend_expediency(blend: f64, sim: f64, eu: f64) -> f64 {
    (blend * sim + (1.0 - blend) * eu).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub solution: Assignment,
    pub predicted_utility: f64,
    pub eval_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetainOutcome {
    Retained(CaseId),
    Merged(CaseId),
}

impl RetainOutcome {
    pub fn case_id(self) -> CaseId {
        match self {
            RetainOutcome::Retained(id) | RetainOutcome::Merged(id) => id,
        }
    }
}

/// Records the realized utility of a case and confirms or fails it (strictly above `threshold` confirms).
pub fn revise(
    kb: &mut KnowledgeBase,
    id: CaseId,
    realized_utility: f64,
    threshold: f64,
) -> Result<Outcome, EngineError> {
    let case = kb.get_mut(id).ok_or(KbError::NotFound(id))?;
    case.outcome = Outcome {
        status: if realized_utility > threshold {
            CaseStatus::Confirmed
        } else {
            CaseStatus::Failed
        },
        realized_utility: Some(realized_utility.clamp(0.0, 1.0)),
    };
    Ok(case.outcome.clone())
}

pub struct CbrEngine<'a> {
    config: EngineConfig,
    objective: Objective<'a>,
    similarity: SimilarityConfig,
}

impl<'a> CbrEngine<'a> {
    pub fn new(config: EngineConfig, objective: Objective<'a>) -> Result<Self, EngineError> {
        let problems = config.problems();
        if !problems.is_empty() {
            return Err(EngineError::InvalidConfig(problems.join("; ")));
        }
        if !objective.schema.has_controllable() {
            return Err(EngineError::NoControllables);
        }
        let similarity = SimilarityConfig::from_schema(objective.schema)?;
        Ok(CbrEngine {
            config,
            objective,
            similarity,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn objective(&self) -> &Objective<'a> {
        &self.objective
    }

    pub fn similarity(&self) -> &SimilarityConfig {
        &self.similarity
    }

    fn check_request(
        &self,
        kb: &KnowledgeBase,
        request: &AdaptationRequest,
    ) -> Result<(), EngineError> {
        kb.check_schema(self.objective.schema)?;
        let violations = self.objective.schema.validate_state(&request.state);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(EngineError::InvalidRequest(text.join("; ")));
        }
        Ok(())
    }

    /// Usable cases ranked by similarity descending, ties by ascending id.
    pub fn retrieve(
        &self,
        kb: &KnowledgeBase,
        request: &AdaptationRequest,
    ) -> Result<Vec<RankedCase>, EngineError> {
        kb.check_schema(self.objective.schema)?;
        let mut ranked = Vec::with_capacity(kb.len());
        for case in kb.cases() {
            if self.config.exclude_failed && case.outcome.status == CaseStatus::Failed {
                continue;
            }
            let sim = self.similarity.similarity(&request.state, &case.problem)?;
            ranked.push(RankedCase { id: case.id, sim });
        }
        ranked.sort_by(|a, b| b.sim.total_cmp(&a.sim).then(a.id.cmp(&b.id)));
        Ok(ranked)
    }

    /// Case expediency and the expected utility it was computed from.
    pub fn case_expediency(
        &self,
        kb: &KnowledgeBase,
        ranked: &RankedCase,
        request: &AdaptationRequest,
    ) -> Result<(f64, f64), EngineError> {
        let case = kb.get(ranked.id).ok_or(KbError::NotFound(ranked.id))?;
        let candidate = self
            .objective
            .schema
            .merge_solution(&request.state, &case.solution)?;
        let eu = self.objective.expected_utility(&candidate)?;
        Ok((
            blend_expediency(self.config.expediency_blend, ranked.sim, eu),
            eu,
        ))
    }

    /// Reuses the frame member with the highest expediency (ties to the lowest id).
    pub fn select_response(
        &self,
        kb: &mut KnowledgeBase,
        qaf: &[RankedCase],
        request: &AdaptationRequest,
    ) -> Result<AdaptationResponse, EngineError> {
        let start = Instant::now();
        let mut best: Option<(f64, f64, CaseId)> = None;
        for r in qaf {
            let (ce, eu) = self.case_expediency(kb, r, request)?;
            let better = match best {
                None => true,
                Some((bce, _, bid)) => ce > bce || (ce == bce && r.id < bid),
            };
            if better {
                best = Some((ce, eu, r.id));
            }
        }
        let (_, eu, id) = best.ok_or(EngineError::EmptyQaf)?;
        let case = kb.get_mut(id).ok_or(KbError::NotFound(id))?;
        case.use_count += 1;
        Ok(AdaptationResponse {
            solution: case.solution.clone(),
            predicted_utility: eu,
            provenance: Provenance::Reused(id),
            threshold_met: eu > self.objective.utility.threshold,
            eval_count: qaf.len() as u64,
            elapsed: start.elapsed(),
        })
    }

    /// Candidate values for one controllable attribute.
    pub fn grid(&self, attr: &AttributeSchema) -> Vec<Value> {
        match &attr.kind {
            AttributeKind::Numeric {
                min,
                max,
                integer_valued,
                ..
            } => {
                let n = self.config.grid_points_per_numeric.max(1);
                let mut out: Vec<f64> = Vec::with_capacity(n);
                for i in 0..n {
                    let mut x = if n == 1 {
                        *min
                    } else if i == n - 1 {
                        *max
                    } else {
                        min + (max - min) * i as f64 / (n - 1) as f64
                    };
                    if *integer_valued {
                        x = x.round();
                    }
                    if out.last() != Some(&x) {
                        out.push(x);
                    }
                }
                out.into_iter().map(Value::Num).collect()
            }
            AttributeKind::Categorical { allowed } => {
                allowed.iter().map(|l| Value::Label(l.clone())).collect()
            }
        }
    }

    /// Coordinate ascent on expected utility over the controllable grid.
    ///
    /// Starts from the top-ranked case's solution (or the request's own controllables
    /// when nothing was retrieved). Each step moves one attribute, in schema order, to
    /// its best grid value if that strictly improves; passes repeat until one changes
    /// nothing or `max_passes` is hit. With satisficing, the search stops once the
    /// incumbent exceeds threshold plus approach margin.
    pub fn constructive_adapt(
        &self,
        kb: &KnowledgeBase,
        request: &AdaptationRequest,
        ranked: &[RankedCase],
    ) -> Result<Construction, EngineError> {
        let schema = self.objective.schema;
        let mut current = match ranked.first() {
            Some(top) => kb
                .get(top.id)
                .ok_or(KbError::NotFound(top.id))?
                .solution
                .clone(),
            None => schema.controllable_part(&request.state),
        };
        let good_enough = self.objective.utility.threshold + self.objective.utility.approach_margin;
        let satisfied = |eu: f64| self.config.satisficing && eu > good_enough;

        let mut evals = 0u64;
        let mut score = |solution: &Assignment| -> Result<f64, EngineError> {
            evals += 1;
            let state = schema.merge_solution(&request.state, solution)?;
            self.objective.expected_utility(&state)
        };

        let mut current_eu = score(&current)?;
        let controllables: Vec<&AttributeSchema> = schema.controllables().collect();
        let grids: Vec<Vec<Value>> = controllables.iter().map(|a| self.grid(a)).collect();

        'search: {
            if satisfied(current_eu) {
                break 'search;
            }
            for _ in 0..self.config.max_passes {
                let mut changed = false;
                for (attr, grid) in controllables.iter().zip(&grids) {
                    let incumbent = current.get(&attr.name).cloned();
                    let mut best: Option<(f64, &Value)> = None;
                    let mut best_eu = current_eu;
                    for v in grid {
                        if Some(v) == incumbent.as_ref() {
                            continue;
                        }
                        let mut candidate = current.clone();
                        candidate.set(&attr.name, v.clone());
                        let eu = score(&candidate)?;
                        if eu > best_eu {
                            best_eu = eu;
                            best = Some((eu, v));
                        }
                    }
                    if let Some((eu, v)) = best {
                        current.set(&attr.name, v.clone());
                        current_eu = eu;
                        changed = true;
                    }
                    if satisfied(current_eu) {
                        break 'search;
                    }
                }
                if !changed {
                    break;
                }
            }
        }

        Ok(Construction {
            solution: current,
            predicted_utility: current_eu,
            eval_count: evals,
        })
    }

    /// Stores a constructed solution unless the nearest case already holds it for
    /// an almost identical context, in which case that case's use count grows.
    pub fn retain(
        &self,
        kb: &mut KnowledgeBase,
        request: &AdaptationRequest,
        solution: &Assignment,
        predicted_utility: f64,
    ) -> Result<RetainOutcome, EngineError> {
        kb.check_schema(self.objective.schema)?;
        let mut nearest: Option<(f64, CaseId)> = None;
        for case in kb.cases() {
            let sim = self.similarity.similarity(&request.state, &case.problem)?;
            if nearest.is_none_or(|(s, _)| sim > s) {
                nearest = Some((sim, case.id));
            }
        }
        if let Some((sim, id)) = nearest {
            if sim >= self.config.dedup_threshold {
                let case = kb.get_mut(id).ok_or(KbError::NotFound(id))?;
                if &case.solution == solution {
                    case.use_count += 1;
                    return Ok(RetainOutcome::Merged(id));
                }
            }
        }
        let id = kb.insert(
            self.objective.schema,
            CaseDraft {
                problem: request.state.clone(),
                solution: solution.clone(),
                predicted_utility: predicted_utility.clamp(0.0, 1.0),
                outcome: Outcome::untested(),
                source: CaseSource::Constructed,
                use_count: 1,
            },
        )?;
        Ok(RetainOutcome::Retained(id))
    }

    /// One full adaptation: reuse from the qualified frame when possible, otherwise
    /// construct and retain. A response whose prediction misses the threshold is
    /// returned flagged rather than as an error.
    pub fn adapt(
        &self,
        kb: &mut KnowledgeBase,
        request: &AdaptationRequest,
    ) -> Result<AdaptationResponse, EngineError> {
        let start = Instant::now();
        self.check_request(kb, request)?;
        let ranked = self.retrieve(kb, request)?;
        let qaf = build_qaf(&ranked, self.config.qaf_threshold);
        if !qaf.is_empty() {
            let mut response = self.select_response(kb, &qaf, request)?;
            response.elapsed = start.elapsed();
            return Ok(response);
        }
        let built = self.constructive_adapt(kb, request, &ranked)?;
        let retained = self.retain(kb, request, &built.solution, built.predicted_utility)?;
        Ok(AdaptationResponse {
            threshold_met: built.predicted_utility > self.objective.utility.threshold,
            solution: built.solution,
            predicted_utility: built.predicted_utility,
            provenance: Provenance::Constructed(retained.case_id()),
            eval_count: built.eval_count,
            elapsed: start.elapsed(),
        })
    }
}
