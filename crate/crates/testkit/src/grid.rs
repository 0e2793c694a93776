//! Exhaustive search over the full cartesian grid of controllable values.

use sase_core::domain::{Assignment, AttributeKind, AttributeSchema, SystemState, Value};
use sase_core::engine::{EngineError, Objective};

/// `points` equally spaced values over a numeric range (rounded and deduplicated
/// for integer attributes), or every label of a categorical attribute.
pub fn axis(attr: &AttributeSchema, points: usize) -> Vec<Value> {
    match &attr.kind {
        AttributeKind::Numeric {
            min,
            max,
            integer_valued,
            ..
        } => {
            let mut xs: Vec<f64> = (0..points)
                .map(|i| {
                    let t = if points == 1 {
                        0.0
                    } else {
                        i as f64 / (points - 1) as f64
                    };
                    let x = if i + 1 == points && points > 1 {
                        *max
                    } else {
                        min + t * (max - min)
                    };
                    if *integer_valued {
                        x.round()
                    } else {
                        x
                    }
                })
                .collect();
            xs.dedup();
            xs.into_iter().map(Value::Num).collect()
        }
        AttributeKind::Categorical { allowed } => {
            allowed.iter().cloned().map(Value::Label).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBest {
    pub solution: Assignment,
    pub expected_utility: f64,
    pub evaluations: u64,
}

/// Highest expected utility over every combination of controllable grid values
/// applied to `state` (first combination wins ties).
pub fn exhaustive_best(
    objective: &Objective,
    state: &SystemState,
    points: usize,
) -> Result<GridBest, EngineError> {
    let attrs: Vec<&AttributeSchema> = objective.schema.controllables().collect();
    let axes: Vec<Vec<Value>> = attrs.iter().map(|a| axis(a, points)).collect();
    let mut index = vec![0usize; attrs.len()];
    let mut best: Option<GridBest> = None;
    let mut evaluations = 0;
    loop {
        let mut candidate = state.clone();
        let mut solution = Assignment::new();
        for ((attr, values), &i) in attrs.iter().zip(&axes).zip(&index) {
            candidate.set(&attr.name, values[i].clone());
            solution.set(&attr.name, values[i].clone());
        }
        let eu = objective.expected_utility(&candidate)?;
        evaluations += 1;
        if best.as_ref().is_none_or(|b| eu > b.expected_utility) {
            best = Some(GridBest {
                solution,
                expected_utility: eu,
                evaluations: 0,
            });
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == index.len() {
                let mut best = best.expect("grid is nonempty");
                best.evaluations = evaluations;
                return Ok(best);
            }
            index[k] += 1;
            if index[k] < axes[k].len() {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}
