//! Straight-line reference for one adaptation step, used to check the engine's branching.

use sase_core::domain::{
    AdaptationRequest, AttributeKind, CaseDraft, CaseId, CaseSource, CaseStatus, KnowledgeBase,
    Outcome, Provenance, SystemState, Value,
};
use sase_core::engine::{CbrEngine, EngineError, RankedCase};

/// What a correct `adapt` call must produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub provenance: Provenance,
    /// Members of the qualified frame, as (case id, similarity), in retrieval order.
    pub qaf: Vec<(CaseId, f64)>,
    pub kb_after: KnowledgeBase,
}

/// Weighted similarity of the weighted attributes, recomputed from the schema.
pub fn similarity(engine: &CbrEngine, a: &SystemState, b: &SystemState) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for attr in engine.objective().schema.attributes() {
        let w = attr.similarity_weight;
        if w <= 0.0 {
            continue;
        }
        let local = match (&attr.kind, a.get(&attr.name), b.get(&attr.name)) {
            (AttributeKind::Numeric { min, max, .. }, Some(Value::Num(x)), Some(Value::Num(y))) => {
                let d = (x - y).abs() / (max - min);
                if d >= 1.0 {
                    0.0
                } else {
                    1.0 - d
                }
            }
            (AttributeKind::Categorical { .. }, Some(x), Some(y)) => {
                if x == y {
                    1.0
                } else {
                    0.0
                }
            }
            _ => panic!("state does not conform on {}", attr.name),
        };
        num += w * local;
        den += w;
    }
    num / den
}

/// Retrieve every usable case, keep the frame by brute-force filtering, then either
/// reuse the exhaustive expediency maximum (ties to the lowest id) or construct and
/// retain.
pub fn reference_adapt(
    engine: &CbrEngine,
    kb: &KnowledgeBase,
    request: &AdaptationRequest,
) -> Result<Expected, EngineError> {
    let config = engine.config();
    let objective = engine.objective();

    let mut ranked: Vec<(CaseId, f64)> = Vec::new();
    for case in kb.cases() {
        if config.exclude_failed && case.outcome.status == CaseStatus::Failed {
            continue;
        }
        ranked.push((case.id, similarity(engine, &request.state, &case.problem)));
    }
    // insertion sort: similarity descending, id ascending
    for i in 1..ranked.len() {
        let mut j = i;
        while j > 0 {
            let (a, b) = (ranked[j - 1], ranked[j]);
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                ranked.swap(j - 1, j);
                j -= 1;
            } else {
                break;
            }
        }
    }

    let qaf: Vec<(CaseId, f64)> = ranked
        .iter()
        .copied()
        .filter(|(_, s)| *s >= config.qaf_threshold)
        .collect();
    let mut kb_after = kb.clone();

    if !qaf.is_empty() {
        let mut best: Option<(CaseId, f64)> = None;
        for &(id, sim) in &qaf {
            let case = kb.get(id).expect("ranked case exists");
            let mut applied = request.state.clone();
            for (name, value) in case.solution.iter() {
                applied.set(name, value.clone());
            }
            let eu = objective.expected_utility(&applied)?;
            let ce = config.expediency_blend * sim + (1.0 - config.expediency_blend) * eu;
            match best {
                Some((bid, bce)) if bce > ce || (bce == ce && bid < id) => {}
                _ => best = Some((id, ce)),
            }
        }
        let (id, _) = best.expect("frame is nonempty");
        kb_after.get_mut(id).expect("chosen case exists").use_count += 1;
        return Ok(Expected {
            provenance: Provenance::Reused(id),
            qaf,
            kb_after,
        });
    }

    let ranked_cases: Vec<RankedCase> = ranked
        .iter()
        .map(|&(id, sim)| RankedCase { id, sim })
        .collect();
    let built = engine.constructive_adapt(kb, request, &ranked_cases)?;

    let mut nearest: Option<(CaseId, f64)> = None;
    for case in kb.cases() {
        let sim = similarity(engine, &request.state, &case.problem);
        match nearest {
            Some((nid, ns)) if ns > sim || (ns == sim && nid < case.id) => {}
            _ => nearest = Some((case.id, sim)),
        }
    }
    if let Some((id, sim)) = nearest {
        let case = kb_after.get_mut(id).expect("nearest case exists");
        if sim >= config.dedup_threshold && case.solution == built.solution {
            case.use_count += 1;
            return Ok(Expected {
                provenance: Provenance::Constructed(id),
                qaf,
                kb_after,
            });
        }
    }
    let id = kb_after.insert(
        objective.schema,
        CaseDraft {
            problem: request.state.clone(),
            solution: built.solution,
            predicted_utility: built.predicted_utility,
            outcome: Outcome::untested(),
            source: CaseSource::Constructed,
            use_count: 1,
        },
    )?;
    Ok(Expected {
        provenance: Provenance::Constructed(id),
        qaf,
        kb_after,
    })
}
