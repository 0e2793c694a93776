//! The monitor / decide / act loop around the simulated managed system.

use thiserror::Error;

use crate::domain::{AdaptationRequest, CaseId, KbError, KnowledgeBase, Provenance, SystemState};
use crate::engine::{revise, CbrEngine, EngineError, Objective};
use crate::quality::{Classification, ExtendedState};

use super::scenario::Scenario;
use super::sim::sim_step;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("engine setup failed: {0}")]
    Setup(EngineError),
    #[error("tick {tick}: {source}")]
    Tick {
        tick: u64,
        #[source]
        source: EngineError,
    },
}

/// What the engine answered on a triggered tick.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSummary {
    pub provenance: Provenance,
    pub threshold_met: bool,
    pub predicted_utility: f64,
    pub eval_count: u64,
    /// Wall-clock adaptation time; zero unless timing was requested.
    pub elapsed_us: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub observed: SystemState,
    pub metrics: ExtendedState,
    pub utility: f64,
    pub expected_utility: f64,
    pub classification: Classification,
    pub triggered: bool,
    pub response: Option<ResponseSummary>,
    pub kb_size: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub ticks: u64,
    /// Record measured adaptation time. Off keeps traces reproducible.
    pub wall_clock: bool,
}

/// Runs the scenario for `options.ticks` ticks against `kb`.
///
/// Each tick observes the system, scores it, revises the case applied on the
/// previous tick with the utility now observed, and on a breached or approaching
/// expected utility asks the engine for a response. The response's controllables
/// take effect from the next tick.
pub fn run_loop(
    scenario: &Scenario,
    mut kb: KnowledgeBase,
    options: RunOptions,
) -> Result<(Vec<TickRecord>, KnowledgeBase), RunError> {
    kb.check_schema(&scenario.schema)?;
    let objective = Objective {
        schema: &scenario.schema,
        utility: &scenario.utility,
        metrics: scenario,
        uncertainty: &scenario.uncertainty,
    };
    let engine = CbrEngine::new(scenario.engine.clone(), objective).map_err(RunError::Setup)?;
    let threshold = scenario.utility.threshold;

    let mut controllables = scenario.initial_controllables.clone();
    let mut pending: Option<CaseId> = None;
    let mut records = Vec::with_capacity(options.ticks as usize);

    for tick in 0..options.ticks {
        let at = |source: EngineError| RunError::Tick { tick, source };
        let observed = sim_step(scenario, tick, &controllables);
        let metrics = scenario
            .compute_metrics(&observed)
            .map_err(|e| at(EngineError::Uncertainty(e.into())))?;
        let utility = scenario
            .utility
            .utility(&metrics)
            .map_err(|e| at(e.into()))?;
        let expected_utility = objective.expected_utility(&observed).map_err(at)?;
        let classification = scenario.utility.classify(expected_utility);

        if let Some(id) = pending.take() {
            revise(&mut kb, id, utility, threshold).map_err(at)?;
        }

        let triggered = classification.triggers();
        let response = if triggered {
            let request = AdaptationRequest {
                state: observed.clone(),
                trigger_utility: expected_utility,
                tick,
            };
            let r = engine.adapt(&mut kb, &request).map_err(at)?;
            for (name, value) in r.solution.iter() {
                controllables.set(name, value.clone());
            }
            pending = Some(r.provenance.case_id());
            Some(ResponseSummary {
                provenance: r.provenance,
                threshold_met: r.threshold_met,
                predicted_utility: r.predicted_utility,
                eval_count: r.eval_count,
                elapsed_us: if options.wall_clock {
                    r.elapsed.as_micros() as u64
                } else {
                    0
                },
            })
        } else {
            None
        };

        records.push(TickRecord {
            tick,
            observed,
            metrics,
            utility,
            expected_utility,
            classification,
            triggered,
            response,
            kb_size: kb.len(),
        });
    }
    Ok((records, kb))
}
