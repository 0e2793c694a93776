//! Random states, solutions and knowledge bases conforming to a schema.

use rand::Rng;
use sase_core::domain::{
    AdaptationRequest, Assignment, AttributeKind, AttributeSchema, CaseDraft, CaseSource,
    CaseStatus, KnowledgeBase, Outcome, SchemaSet, SystemState, Value,
};

/// How finely numeric values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// Any value in range (integers for integer-valued attributes).
    Fine,
    /// One of 11 evenly spaced values, so that equal similarities are common.
    Coarse,
}

pub fn random_value(rng: &mut impl Rng, attr: &AttributeSchema, resolution: Resolution) -> Value {
    match &attr.kind {
        AttributeKind::Numeric {
            min,
            max,
            integer_valued,
            ..
        } => {
            let mut x = match resolution {
                Resolution::Fine => rng.gen_range(*min..=*max),
                Resolution::Coarse => min + (max - min) * rng.gen_range(0..=10) as f64 / 10.0,
            };
            if *integer_valued {
                x = x.round().clamp(*min, *max);
            }
            Value::Num(x)
        }
        AttributeKind::Categorical { allowed } => {
            Value::Label(allowed[rng.gen_range(0..allowed.len())].clone())
        }
    }
}

pub fn random_state(rng: &mut impl Rng, schema: &SchemaSet, resolution: Resolution) -> SystemState {
    let mut state = SystemState::new();
    for attr in schema.attributes() {
        state.set(&attr.name, random_value(rng, attr, resolution));
    }
    state
}

pub fn random_solution(
    rng: &mut impl Rng,
    schema: &SchemaSet,
    resolution: Resolution,
) -> Assignment {
    let mut solution = Assignment::new();
    for attr in schema.controllables() {
        solution.set(&attr.name, random_value(rng, attr, resolution));
    }
    solution
}

pub fn random_request(
    rng: &mut impl Rng,
    schema: &SchemaSet,
    resolution: Resolution,
) -> AdaptationRequest {
    AdaptationRequest {
        state: random_state(rng, schema, resolution),
        trigger_utility: rng.gen_range(0.0..0.75),
        tick: rng.gen_range(0..1000),
    }
}

pub fn random_outcome(rng: &mut impl Rng) -> Outcome {
    match rng.gen_range(0..3) {
        0 => Outcome::untested(),
        1 => Outcome {
            status: CaseStatus::Confirmed,
            realized_utility: Some(rng.gen_range(0.7..=1.0)),
        },
        _ => Outcome {
            status: CaseStatus::Failed,
            realized_utility: Some(rng.gen_range(0.0..=0.7)),
        },
    }
}

/// A knowledge base of `len` random cases; a few ids are skipped to mimic a history.
pub fn random_kb(
    rng: &mut impl Rng,
    schema: &SchemaSet,
    len: usize,
    resolution: Resolution,
) -> KnowledgeBase {
    let mut kb = KnowledgeBase::new(schema);
    for _ in 0..len {
        let draft = CaseDraft {
            problem: random_state(rng, schema, resolution),
            solution: random_solution(rng, schema, resolution),
            predicted_utility: rng.gen_range(0.0..=1.0),
            outcome: random_outcome(rng),
            source: if rng.gen_bool(0.8) {
                CaseSource::Constructed
            } else {
                CaseSource::Seeded
            },
            use_count: rng.gen_range(1..6),
        };
        kb.insert(schema, draft).expect("random case conforms");
    }
    kb
}
