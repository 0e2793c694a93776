//! Simulated managed system: environment program plus seeded noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Assignment, AttributeKind, SystemState, Value};
use crate::uncertainty::sub_seed;

use super::scenario::Scenario;

/// Observation at `tick` with the given controllable settings.
///
/// Environment attributes take the active segment's values plus uniform noise in
/// `±amplitude`, clamped to the attribute range (and rounded when integer-valued).
/// The noise stream depends only on the scenario seed and the tick.
pub fn sim_step(scenario: &Scenario, tick: u64, controllables: &Assignment) -> SystemState {
    let mut state = SystemState::new();
    let segment = scenario
        .segment_at(tick)
        .expect("validated scenarios cover every tick from 0");
    for (name, value) in &segment.values {
        state.set(name, value.clone());
    }
    if !segment.noise.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(scenario.seed, tick));
        for noise in &segment.noise {
            let Some(attr) = scenario.schema.get(&noise.attribute) else {
                continue;
            };
            let AttributeKind::Numeric {
                min,
                max,
                integer_valued,
                ..
            } = attr.kind
            else {
                continue;
            };
            let base = state.num(&noise.attribute).unwrap_or(min);
            let u: f64 = rng.gen();
            let mut x = base + noise.amplitude * (2.0 * u - 1.0);
            if integer_valued {
                x = x.round();
            }
            state.set(&noise.attribute, Value::Num(x.clamp(min, max)));
        }
    }
    for (name, value) in controllables.iter() {
        state.set(name, value.clone());
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::scenario::WEBSERVICE_V1;

    #[test]
    fn noiseless_observation_matches_segment() {
        let s = Scenario::webservice_v1();
        let ctl = s.initial_controllables.clone();
        let obs = sim_step(&s, 10, &ctl);
        assert_eq!(obs.num("arrival_rate"), Some(100.0));
        assert_eq!(obs.num("threads"), Some(8.0));
        assert_eq!(sim_step(&s, 50, &ctl).num("arrival_rate"), Some(800.0));
        assert!(s.schema.validate_state(&obs).is_empty());
    }

    #[test]
    fn noise_is_seeded_and_clamped() {
        let text = WEBSERVICE_V1.replacen(
            "assignments = { arrival_rate = 100 }",
            "assignments = { arrival_rate = 980 }\nnoise = [{ attribute = \"arrival_rate\", amplitude = 50 }]",
            1,
        );
        let s = Scenario::from_toml_str(&text).unwrap();
        let ctl = s.initial_controllables.clone();
        let mut seen_clamp = false;
        for tick in 0..50 {
            let a = sim_step(&s, tick, &ctl);
            assert_eq!(a, sim_step(&s, tick, &ctl));
            let x = a.num("arrival_rate").unwrap();
            assert!((930.0..=1000.0).contains(&x), "{x}");
            seen_clamp |= x == 1000.0;
        }
        assert!(seen_clamp);
        let mut other = s.clone();
        other.set_seed(s.seed + 1);
        assert_ne!(sim_step(&s, 3, &ctl), sim_step(&other, 3, &ctl));
    }
}
