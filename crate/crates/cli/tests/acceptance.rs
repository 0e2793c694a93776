//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p sase-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sase_core::domain::{AttributeSchema, KnowledgeBase, Provenance, SchemaSet, SystemState};
use sase_core::engine::{CbrEngine, EngineConfig, Objective};
use sase_core::quality::{RawMetrics, UtilityCurve, UtilitySpec, UtilityTerm};
use sase_core::runtime::expr::{parse_expression, EvalError, ParseErrorKind};
use sase_core::runtime::{run_loop, RunOptions, Scenario, TickRecord};
use sase_core::uncertainty::{expected_utility, Location, Nature, UncertaintyModel};
use sase_testkit::cbr::reference_adapt;
use sase_testkit::expr::{evaluate, random_expression, OracleEvalError};
use sase_testkit::fixtures::{random_kb, random_request, Resolution};
use sase_testkit::grid::exhaustive_best;

type Outcome = Result<String, String>;

struct Criterion {
    number: u32,
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn objective(s: &Scenario) -> Objective<'_> {
    Objective {
        schema: &s.schema,
        utility: &s.utility,
        metrics: s,
        uncertainty: &s.uncertainty,
    }
}

fn run(
    s: &Scenario,
    kb: KnowledgeBase,
    ticks: u64,
) -> Result<(Vec<TickRecord>, KnowledgeBase), String> {
    run_loop(
        s,
        kb,
        RunOptions {
            ticks,
            wall_clock: false,
        },
    )
    .map_err(|e| e.to_string())
}

/// Randomized (knowledge base, request, configuration) instances checked against the
/// straight-line reference: provenance, chosen case and the full knowledge-base delta.
fn algorithm_fidelity() -> Outcome {
    let s = Scenario::webservice_v1();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let (mut reused, mut retained, mut merged) = (0, 0, 0);
    for instance in 0..200 {
        let config = EngineConfig {
            qaf_threshold: [0.6, 0.7, 0.8, 0.9, 1.0][rng.gen_range(0..5)],
            expediency_blend: [0.0, 0.25, 0.5, 0.75, 1.0][rng.gen_range(0..5)],
            dedup_threshold: [0.8, 0.9, 0.98, 1.0][rng.gen_range(0..4)],
            satisficing: rng.gen_bool(0.5),
            exclude_failed: rng.gen_bool(0.8),
            ..EngineConfig::default()
        };
        let engine = CbrEngine::new(config, objective(&s)).map_err(|e| e.to_string())?;
        let resolution = if rng.gen_bool(0.7) {
            Resolution::Coarse
        } else {
            Resolution::Fine
        };
        let len = rng.gen_range(0..10);
        let mut kb = random_kb(&mut rng, &s.schema, len, resolution);
        let mut request = random_request(&mut rng, &s.schema, resolution);
        if !kb.is_empty() && rng.gen_bool(0.3) {
            // replay a stored context exactly, sometimes after storing its constructed answer
            let id = kb.cases().nth(rng.gen_range(0..kb.len())).unwrap().id;
            request.state = kb.get(id).unwrap().problem.clone();
            if rng.gen_bool(0.5) {
                let solo = KnowledgeBase::new(&s.schema);
                let built = engine
                    .constructive_adapt(&solo, &request, &[])
                    .map_err(|e| e.to_string())?;
                kb.get_mut(id).unwrap().solution = built.solution;
            }
        }

        let expected = reference_adapt(&engine, &kb, &request).map_err(|e| e.to_string())?;
        let before = kb.clone();
        let response = engine.adapt(&mut kb, &request).map_err(|e| e.to_string())?;
        ensure(response.provenance == expected.provenance, || {
            format!(
                "instance {instance}: provenance {:?}, reference {:?}",
                response.provenance, expected.provenance
            )
        })?;
        ensure(kb == expected.kb_after, || {
            format!("instance {instance}: knowledge base delta differs")
        })?;
        match response.provenance {
            Provenance::Reused(_) => reused += 1,
            Provenance::Constructed(_) if kb.len() > before.len() => retained += 1,
            Provenance::Constructed(_) => merged += 1,
        }
    }
    Ok(format!("200/200 agree (reused {reused}, constructed+retained {retained}, constructed+merged {merged})"))
}

/// Requests the exhaustive grid certifies as feasible must get threshold_met.
fn ensure_clause() -> Outcome {
    let s = Scenario::webservice_v1();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let engines: Vec<CbrEngine> = [true, false]
        .iter()
        .map(|&satisficing| {
            CbrEngine::new(
                EngineConfig {
                    satisficing,
                    ..EngineConfig::default()
                },
                objective(&s),
            )
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let (mut certified, mut skipped) = (0, 0);
    while certified < 50 {
        let request = random_request(&mut rng, &s.schema, Resolution::Fine);
        let best =
            exhaustive_best(&objective(&s), &request.state, 17).map_err(|e| e.to_string())?;
        if best.expected_utility <= s.utility.threshold {
            skipped += 1;
            continue;
        }
        certified += 1;
        for (engine, mode) in engines.iter().zip(["on", "off"]) {
            let mut kb = KnowledgeBase::new(&s.schema);
            let r = engine.adapt(&mut kb, &request).map_err(|e| e.to_string())?;
            ensure(r.threshold_met, || {
                format!(
                    "satisficing {mode}: arrival_rate {:?} predicted {} but grid reaches {}",
                    request.state.num("arrival_rate"),
                    r.predicted_utility,
                    best.expected_utility
                )
            })?;
        }
    }
    Ok(format!("50/50 certified requests met the threshold with satisficing on and off ({skipped} infeasible draws skipped)"))
}

/// The second encounter with the arrival-rate step recalls instead of constructing.
fn remembrance_economy() -> Outcome {
    let s = Scenario::webservice_v1();
    let (first, kb) = run(&s, KnowledgeBase::new(&s.schema), 100)?;
    let (second, _) = run(&s, kb, 100)?;
    let step = |records: &[TickRecord]| {
        records[50]
            .response
            .clone()
            .ok_or("no response at tick 50".to_string())
    };
    let (a, b) = (step(&first)?, step(&second)?);
    ensure(matches!(a.provenance, Provenance::Constructed(_)), || {
        format!("first encounter was {:?}", a.provenance)
    })?;
    ensure(matches!(b.provenance, Provenance::Reused(_)), || {
        format!("second encounter was {:?}", b.provenance)
    })?;
    ensure(a.eval_count >= 10 * b.eval_count, || {
        format!(
            "eval_count {} then {}: less than 10x saving",
            a.eval_count, b.eval_count
        )
    })?;
    Ok(format!(
        "eval_count {} constructed -> {} reused",
        a.eval_count, b.eval_count
    ))
}

/// One trigger episode at the step, recovery within three ticks, quiet afterwards.
fn end_to_end_recovery() -> Outcome {
    let s = Scenario::webservice_v1();
    ensure(s.environment.iter().all(|seg| seg.noise.is_empty()), || {
        "reference scenario is noisy".into()
    })?;
    let (records, _) = run(&s, KnowledgeBase::new(&s.schema), 101)?;
    let triggered: Vec<u64> = records
        .iter()
        .filter(|r| r.triggered)
        .map(|r| r.tick)
        .collect();
    ensure(!triggered.is_empty() && triggered[0] == 50, || {
        format!("triggers at {triggered:?}")
    })?;
    let episode_end = triggered
        .iter()
        .zip(50..)
        .take_while(|(t, expect)| **t == *expect)
        .count() as u64
        + 50;
    ensure(triggered.iter().all(|&t| t < episode_end), || {
        format!("more than one episode: {triggered:?}")
    })?;
    let recovered = (51..=53).find(|&t| records[t as usize].expected_utility >= 0.7);
    let t = recovered.ok_or_else(|| {
        let eus: Vec<f64> = (51..=53).map(|t| records[t].expected_utility).collect();
        format!("expected utility not restored within 3 ticks: {eus:?}")
    })?;
    Ok(format!(
        "triggers {triggered:?}; expected utility {:.4} at tick {t}; quiet through tick 100",
        records[t as usize].expected_utility
    ))
}

fn tent_fixture() -> (SchemaSet, UtilitySpec, SystemState) {
    let schema = SchemaSet::new(vec![
        AttributeSchema::numeric("x", 0.0, 20.0),
        AttributeSchema::numeric("knob", 0.0, 1.0).controllable(),
    ])
    .unwrap();
    let spec = UtilitySpec {
        terms: vec![UtilityTerm {
            metric: "x".into(),
            curve: UtilityCurve::Target {
                peak: 10.0,
                tolerance: 5.0,
            },
            weight: 1.0,
        }],
        threshold: 0.7,
        approach_margin: 0.05,
    };
    (
        schema,
        spec,
        SystemState::new().with("x", 10.0).with("knob", 0.5),
    )
}

fn uncertainty_suite() -> Outcome {
    const TOL: f64 = 0.02;
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5);

    // (a) zero levels reproduce the exact utility
    let mut s = Scenario::webservice_v1();
    for nature in [Nature::Variability, Nature::LackOfKnowledge] {
        s.uncertainty = UncertaintyModel::new(9)
            .with("arrival_rate", Location::Environment, 0.0, nature)
            .with("cache_mb", Location::InternalModel, 0.0, nature);
        for _ in 0..50 {
            let state = random_request(&mut rng, &s.schema, Resolution::Fine).state;
            let u = s
                .utility
                .utility(&s.compute_metrics(&state).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let eu = expected_utility(&s.utility, &s, &s.schema, &state, &s.uncertainty)
                .map_err(|e| e.to_string())?;
            ensure(eu == u, || format!("(a) zero levels: {eu} != {u}"))?;
        }
    }

    // (b) and (d): tent fixture, x = 10 with interval [8, 12] under target(10, 5)
    let (schema, spec, state) = tent_fixture();
    let model = UncertaintyModel::new(42).with("x", Location::Monitoring, 0.2, Nature::Variability);
    let eu = expected_utility(&spec, &RawMetrics(&schema), &schema, &state, &model)
        .map_err(|e| e.to_string())?;
    let u = expected_utility(
        &spec,
        &RawMetrics(&schema),
        &schema,
        &state,
        &UncertaintyModel::new(42),
    )
    .map_err(|e| e.to_string())?;
    ensure(eu <= u + TOL, || format!("(b) Jensen: {eu} > {u} + {TOL}"))?;
    ensure((eu - 0.8).abs() <= TOL, || {
        format!("(d) tent mean {eu}, analytic 0.8")
    })?;

    // (c) lack of knowledge is never more optimistic than variability. The ordering is
    // judged at 4096 samples, where the sampling error sits well inside the tolerance;
    // the default 64-sample result is reported alongside.
    const ORDERING_SAMPLES: usize = 4096;
    let schema2 = SchemaSet::new(vec![
        AttributeSchema::numeric("x", 0.0, 20.0),
        AttributeSchema::numeric("y", 0.0, 1.0),
        AttributeSchema::numeric("knob", 0.0, 1.0).controllable(),
    ])
    .unwrap();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut default_n_outside = Vec::new();
    for i in 0..50 {
        let spec = UtilitySpec {
            terms: vec![
                UtilityTerm {
                    metric: "x".into(),
                    curve: UtilityCurve::Target {
                        peak: rng.gen_range(0.0..20.0),
                        tolerance: rng.gen_range(2.0..10.0),
                    },
                    weight: rng.gen_range(0.5..2.0),
                },
                UtilityTerm {
                    metric: "y".into(),
                    curve: UtilityCurve::LinearInc { lo: 0.0, hi: 1.0 },
                    weight: rng.gen_range(0.5..2.0),
                },
            ],
            threshold: 0.7,
            approach_margin: 0.05,
        };
        let state = SystemState::new()
            .with("x", rng.gen_range(0.0..=20.0))
            .with("y", rng.gen_range(0.0..=1.0))
            .with("knob", 0.0);
        let variability = UncertaintyModel::new(i)
            .with(
                "x",
                Location::Environment,
                rng.gen_range(0.0..=1.0),
                Nature::Variability,
            )
            .with(
                "y",
                Location::Monitoring,
                rng.gen_range(0.0..=1.0),
                Nature::Variability,
            );
        let mut pessimistic = variability.clone();
        pessimistic.descriptors.get_mut("x").unwrap().nature = Nature::LackOfKnowledge;
        let m = RawMetrics(&schema2);
        let gap = |samples: usize| -> Result<f64, String> {
            let v = UncertaintyModel {
                sample_count: samples,
                ..variability.clone()
            };
            let l = UncertaintyModel {
                sample_count: samples,
                ..pessimistic.clone()
            };
            let v = expected_utility(&spec, &m, &schema2, &state, &v).map_err(|e| e.to_string())?;
            let l = expected_utility(&spec, &m, &schema2, &state, &l).map_err(|e| e.to_string())?;
            Ok(l - v)
        };
        let g = gap(ORDERING_SAMPLES)?;
        worst_gap = worst_gap.max(g);
        ensure(g <= TOL, || {
            format!("(c) fixture {i}: lack of knowledge exceeds variability by {g}")
        })?;
        let g64 = gap(64)?;
        if g64 > TOL {
            default_n_outside.push(format!("#{i} by {g64:.4}"));
        }
    }
    let default_note = if default_n_outside.is_empty() {
        "none outside tolerance at 64 samples".to_owned()
    } else {
        format!(
            "at 64 samples {} outside tolerance ({})",
            default_n_outside.len(),
            default_n_outside.join(", ")
        )
    };
    Ok(format!(
        "(a) exact on 100 states; (b) {eu:.4} <= {u}; (c) worst lack_of_knowledge - variability {worst_gap:.4} \
         at {ORDERING_SAMPLES} samples, {default_note}; (d) tent mean {eu:.4}"
    ))
}

fn determinism_and_formats() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenario =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/webservice-v1.toml");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let metrics = dir.path().join(format!("metrics{i}.csv"));
        let kb = dir.path().join(format!("kb{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_sase"))
            .arg("run")
            .arg("--scenario")
            .arg(&scenario)
            .args(["--ticks", "100", "--seed", "123"])
            .arg("--metrics")
            .arg(&metrics)
            .arg("--kb-out")
            .arg(&kb)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.code() == Some(0), || {
            format!("sase run exited with {status}")
        })?;
        let read = |p: &Path| fs::read(p).map_err(|e| e.to_string());
        outputs.push((read(&metrics)?, read(&kb)?));
    }
    ensure(outputs[0].0 == outputs[1].0, || {
        "metrics CSV differs between runs".into()
    })?;
    ensure(outputs[0].1 == outputs[1].1, || {
        "knowledge base differs between runs".into()
    })?;

    let s = Scenario::webservice_v1();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    for i in 0..100 {
        let len = rng.gen_range(0..15);
        let kb = random_kb(&mut rng, &s.schema, len, Resolution::Fine);
        let back =
            KnowledgeBase::from_json(&kb.to_json(), Some(&s.schema)).map_err(|e| e.to_string())?;
        ensure(back == kb, || {
            format!("knowledge base {i} changed in a round trip")
        })?;
    }
    Ok(format!(
        "2 runs byte-identical ({} CSV bytes, {} KB bytes); 100/100 KB round trips",
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

fn expression_evaluator() -> Outcome {
    let vars = ["threads", "cache_mb", "arrival_rate"];
    let bind = |n: &str| match n {
        "threads" => Some(24.0),
        "cache_mb" => Some(640.0),
        "arrival_rate" => Some(0.35),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let (mut finite, mut failing) = (0, 0);
    for _ in 0..100 {
        let text = random_expression(&mut rng, &vars, 4);
        let expected =
            evaluate(&text, &bind).map_err(|e| format!("{text}: oracle rejected: {e:?}"))?;
        let tree = parse_expression(&text).map_err(|e| format!("{text}: {e}"))?;
        match (tree.eval(&bind), expected) {
            (Ok(a), Ok(b)) => {
                finite += 1;
                ensure((a - b).abs() <= 1e-12 * b.abs().max(1.0), || {
                    format!("{text}: {a} vs oracle {b}")
                })?;
            }
            (Err(a), Err(b)) => {
                failing += 1;
                let same = matches!(
                    (&a, b),
                    (
                        EvalError::DivisionByZero { .. },
                        OracleEvalError::DivisionByZero
                    ) | (EvalError::LogDomain { .. }, OracleEvalError::LogDomain)
                        | (EvalError::NonFinite { .. }, OracleEvalError::NonFinite)
                        | (EvalError::Unbound { .. }, OracleEvalError::Unbound)
                );
                ensure(same, || format!("{text}: {a} vs oracle {b:?}"))?;
            }
            (a, b) => return Err(format!("{text}: {a:?} vs oracle {b:?}")),
        }
    }

    let value = |t: &str| {
        parse_expression(t)
            .map_err(|e| e.to_string())?
            .eval(&bind)
            .map_err(|e| e.to_string())
    };
    ensure(value("2 + 3 * 4")? == 14.0, || "2 + 3 * 4".into())?;
    ensure(value("(2 + 3) * 4")? == 20.0, || "(2 + 3) * 4".into())?;
    ensure(value("clamp(7, 0, 5)")? == 5.0, || "clamp(7, 0, 5)".into())?;
    let div = parse_expression("1 / (threads - threads)")
        .map_err(|e| e.to_string())?
        .eval(&bind);
    ensure(matches!(div, Err(EvalError::DivisionByZero { .. })), || {
        format!("division by zero gave {div:?}")
    })?;
    let arity = parse_expression("min(1)").map(|_| ()).map_err(|e| e.kind);
    ensure(
        matches!(
            arity,
            Err(ParseErrorKind::WrongArity {
                func: "min",
                expected: 2,
                found: 1
            })
        ),
        || format!("min(1) gave {arity:?}"),
    )?;
    Ok(format!("100/100 agree with the oracle ({finite} values, {failing} matching errors); fixtures exact"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            number: 1,
            name: "adaptation algorithm fidelity",
            limit: Some(Duration::from_secs(10)),
            check: algorithm_fidelity,
        },
        Criterion {
            number: 2,
            name: "utility threshold guarantee",
            limit: Some(Duration::from_secs(30)),
            check: ensure_clause,
        },
        Criterion {
            number: 3,
            name: "remembrance economy",
            limit: None,
            check: remembrance_economy,
        },
        Criterion {
            number: 4,
            name: "end-to-end recovery",
            limit: Some(Duration::from_secs(5)),
            check: end_to_end_recovery,
        },
        Criterion {
            number: 5,
            name: "uncertainty suite",
            limit: Some(Duration::from_secs(10)),
            check: uncertainty_suite,
        },
        Criterion {
            number: 6,
            name: "determinism and formats",
            limit: None,
            check: determinism_and_formats,
        },
        Criterion {
            number: 7,
            name: "expression evaluator",
            limit: None,
            check: expression_evaluator,
        },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!(
                "criterion {} {}: PASS [{elapsed:.2?}] {detail}",
                c.number, c.name
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {} {}: FAIL [{elapsed:.2?}] {why}",
                    c.number, c.name
                );
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
