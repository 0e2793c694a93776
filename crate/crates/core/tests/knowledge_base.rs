use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sase_core::domain::{AttributeSchema, KbError, KnowledgeBase, SchemaSet};
use sase_core::runtime::Scenario;
use sase_testkit::fixtures::{random_kb, Resolution};

fn mixed_schema() -> SchemaSet {
    SchemaSet::new(vec![
        AttributeSchema::numeric("workers", 1.0, 32.0)
            .integer()
            .controllable(),
        AttributeSchema::categorical("mode", &["eco", "balanced", "turbo"]).controllable(),
        AttributeSchema::numeric("load", 0.0, 1.0),
        AttributeSchema::categorical("region", &["north", "south"]).with_weight(2.0),
    ])
    .unwrap()
}

proptest! {
    #[test]
    fn serialization_round_trips(seed in any::<u64>(), len in 0usize..12, mixed in any::<bool>()) {
        let schema = if mixed { mixed_schema() } else { Scenario::webservice_v1().schema };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(&mut rng, &schema, len, Resolution::Fine);
        let text = kb.to_json();
        let back = KnowledgeBase::from_json(&text, Some(&schema)).unwrap();
        prop_assert_eq!(&back, &kb);
        prop_assert_eq!(back.to_json(), text);
    }
}

#[test]
fn documents_are_stable_text() {
    let schema = Scenario::webservice_v1().schema;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let text = random_kb(&mut rng, &schema, 3, Resolution::Fine).to_json();
    assert!(text.ends_with("}\n"));
    assert!(!text.contains('\r'));
    // keys are sorted: "cases" precedes "next_id", "schema_fingerprint" and "version"
    let positions: Vec<usize> = [
        "\"cases\"",
        "\"next_id\"",
        "\"schema_fingerprint\"",
        "\"version\"",
    ]
    .iter()
    .map(|k| text.find(k).unwrap())
    .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
}

#[test]
fn foreign_and_damaged_documents_are_rejected() {
    let schema = Scenario::webservice_v1().schema;
    let text = KnowledgeBase::new(&mixed_schema()).to_json();
    assert!(matches!(
        KnowledgeBase::from_json(&text, Some(&schema)),
        Err(KbError::FingerprintMismatch { .. })
    ));
    assert!(KnowledgeBase::from_json(&text, None).is_ok());

    let newer = text.replace("\"version\": 1", "\"version\": 2");
    assert!(matches!(
        KnowledgeBase::from_json(&newer, None),
        Err(KbError::VersionMismatch { .. })
    ));
    assert!(matches!(
        KnowledgeBase::from_json(&text[..text.len() / 2], None),
        Err(KbError::Malformed(_))
    ));
}
