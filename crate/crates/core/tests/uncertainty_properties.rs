use proptest::prelude::*;
use sase_core::domain::{AttributeSchema, SchemaSet, SystemState};
use sase_core::quality::{RawMetrics, UtilityCurve, UtilitySpec, UtilityTerm};
use sase_core::runtime::Scenario;
use sase_core::uncertainty::{expected_utility, Location, Nature, UncertaintyModel};

const MC_TOLERANCE: f64 = 0.02;
/// Sample count for properties quantified over arbitrary fixtures. Where the expected
/// and exact utilities nearly coincide, the default 64 samples leave a standard error
/// above the tolerance; 4096 samples bring it well below.
const PROPERTY_SAMPLES: usize = 4096;

fn precise(model: UncertaintyModel) -> UncertaintyModel {
    UncertaintyModel {
        sample_count: PROPERTY_SAMPLES,
        ..model
    }
}

fn tent_spec(metric: &str, peak: f64, tolerance: f64) -> UtilitySpec {
    UtilitySpec {
        terms: vec![UtilityTerm {
            metric: metric.into(),
            curve: UtilityCurve::Target { peak, tolerance },
            weight: 1.0,
        }],
        threshold: 0.7,
        approach_margin: 0.05,
    }
}

fn one_attribute(min: f64, max: f64) -> SchemaSet {
    SchemaSet::new(vec![
        AttributeSchema::numeric("x", min, max),
        AttributeSchema::numeric("knob", 0.0, 1.0).controllable(),
    ])
    .unwrap()
}

fn eu(
    spec: &UtilitySpec,
    schema: &SchemaSet,
    state: &SystemState,
    model: &UncertaintyModel,
) -> f64 {
    expected_utility(spec, &RawMetrics(schema), schema, state, model).unwrap()
}

#[test]
fn tent_mean_matches_closed_form() {
    // x = 10 with half-width 2 under target(10, 5): mean of 1 - |d|/5 over d in [-2, 2] is 0.8
    let schema = one_attribute(0.0, 20.0);
    let spec = tent_spec("x", 10.0, 5.0);
    let state = SystemState::new().with("x", 10.0).with("knob", 0.5);
    let model = UncertaintyModel::new(42).with("x", Location::Monitoring, 0.2, Nature::Variability);
    let got = eu(&spec, &schema, &state, &model);
    assert!((got - 0.8).abs() <= MC_TOLERANCE, "{got}");
}

proptest! {
    #[test]
    fn zero_levels_give_exact_utility(rate in 0.0..=1000.0f64, threads in 1u32..=64, cache in 0.0..=1024.0f64, lok in any::<bool>()) {
        let mut s = Scenario::webservice_v1();
        let nature = if lok { Nature::LackOfKnowledge } else { Nature::Variability };
        s.uncertainty = UncertaintyModel::new(5)
            .with("arrival_rate", Location::Environment, 0.0, nature)
            .with("cache_mb", Location::InternalModel, 0.0, Nature::Variability);
        let state = SystemState::new().with("arrival_rate", rate).with("threads", threads as f64).with("cache_mb", cache);
        let u = s.utility.utility(&s.compute_metrics(&state).unwrap()).unwrap();
        let e = expected_utility(&s.utility, &s, &s.schema, &state, &s.uncertainty).unwrap();
        prop_assert_eq!(e, u);
    }

    #[test]
    fn concave_curve_is_not_improved_by_noise(x in 3.0..17.0f64, level in 0.0..0.3f64, offset in -1.0..=1.0f64, seed in any::<u64>()) {
        // The tent is concave only on its support, so keep the whole interval inside it.
        let half_width = level * 20.0 / 2.0;
        let peak = x + offset * (5.0 - half_width);
        let schema = one_attribute(0.0, 20.0);
        let spec = tent_spec("x", peak, 5.0);
        let state = SystemState::new().with("x", x).with("knob", 0.5);
        let model = precise(UncertaintyModel::new(seed).with("x", Location::Monitoring, level, Nature::Variability));
        let exact = eu(&spec, &schema, &state, &UncertaintyModel::new(seed));
        prop_assert!(eu(&spec, &schema, &state, &model) <= exact + MC_TOLERANCE);
    }

    #[test]
    fn lack_of_knowledge_is_no_more_optimistic(
        x in 0.0..=20.0f64,
        y in 0.0..=1.0f64,
        lx in 0.0..=1.0f64,
        ly in 0.0..=1.0f64,
        peak in 0.0..20.0f64,
        seed in any::<u64>(),
    ) {
        let schema = SchemaSet::new(vec![
            AttributeSchema::numeric("x", 0.0, 20.0),
            AttributeSchema::numeric("y", 0.0, 1.0),
            AttributeSchema::numeric("knob", 0.0, 1.0).controllable(),
        ]).unwrap();
        let spec = UtilitySpec {
            terms: vec![
                UtilityTerm { metric: "x".into(), curve: UtilityCurve::Target { peak, tolerance: 6.0 }, weight: 2.0 },
                UtilityTerm { metric: "y".into(), curve: UtilityCurve::LinearInc { lo: 0.0, hi: 1.0 }, weight: 1.0 },
            ],
            threshold: 0.7,
            approach_margin: 0.05,
        };
        let state = SystemState::new().with("x", x).with("y", y).with("knob", 0.0);
        let variability = precise(
            UncertaintyModel::new(seed)
                .with("x", Location::Environment, lx, Nature::Variability)
                .with("y", Location::Monitoring, ly, Nature::Variability),
        );
        let mut pessimistic = variability.clone();
        pessimistic.descriptors.get_mut("x").unwrap().nature = Nature::LackOfKnowledge;
        prop_assert!(eu(&spec, &schema, &state, &pessimistic) <= eu(&spec, &schema, &state, &variability) + MC_TOLERANCE);
    }

    #[test]
    fn wider_uncertainty_at_a_peak_never_helps(a in 0.0..=1.0f64, b in 0.0..=1.0f64, seed in any::<u64>(), lok in any::<bool>()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let schema = one_attribute(0.0, 20.0);
        let spec = tent_spec("x", 10.0, 4.0);
        let state = SystemState::new().with("x", 10.0).with("knob", 0.5);
        let nature = if lok { Nature::LackOfKnowledge } else { Nature::Variability };
        let at = |level| eu(&spec, &schema, &state, &precise(UncertaintyModel::new(seed).with("x", Location::Monitoring, level, nature)));
        prop_assert!(at(hi) <= at(lo) + MC_TOLERANCE);
    }
}
