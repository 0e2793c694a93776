//! JSON documents exchanged by the `adapt` command.

use sase_core::domain::{AdaptationResponse, Assignment, Provenance};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ResponseDocument {
    pub solution: Assignment,
    pub predicted_utility: f64,
    pub provenance: Provenance,
    pub threshold_met: bool,
    pub eval_count: u64,
    pub elapsed_us: u64,
}

impl From<&AdaptationResponse> for ResponseDocument {
    fn from(r: &AdaptationResponse) -> Self {
        ResponseDocument {
            solution: r.solution.clone(),
            predicted_utility: r.predicted_utility,
            provenance: r.provenance,
            threshold_met: r.threshold_met,
            eval_count: r.eval_count,
            elapsed_us: r.elapsed.as_micros() as u64,
        }
    }
}

impl ResponseDocument {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("response serializes");
        text.push('\n');
        text
    }
}
