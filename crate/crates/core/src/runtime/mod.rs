//! Adaptation mediator, simulated managed system and the derived-metric language.

pub mod expr;
mod mediator;
mod scenario;
mod sim;

pub use mediator::{run_loop, ResponseSummary, RunError, RunOptions, TickRecord};
pub use scenario::{DerivedMetric, Noise, Scenario, ScenarioError, Segment, WEBSERVICE_V1};
pub use sim::sim_step;
