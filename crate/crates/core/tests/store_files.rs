mod common;

use authbreak::store;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[test]
fn malformed_fixtures_yield_typed_errors() {
    let fixtures = common::fixtures();
    assert!(fixtures.len() >= 10);
    for path in fixtures {
        if let Err(msg) = common::check_fixture(&path) {
            panic!("{msg}");
        }
    }
}

#[test]
fn saving_replaces_existing_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("registry.txt");
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let first = common::random_state(&mut rng);
    let second = common::random_state(&mut rng);
    store::save_registry(&first, &path).unwrap();
    store::save_registry(&second, &path).unwrap();
    assert_eq!(store::load_registry(&path).unwrap(), second);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn registry_text_round_trips(seed in any::<u64>()) {
        let state = common::random_state(&mut ChaCha20Rng::seed_from_u64(seed));
        let text = store::render_registry(&state).unwrap();
        prop_assert_eq!(text.lines().count(), state.records().len() + 1);
        prop_assert_eq!(store::parse_registry(&text).unwrap(), state);
    }

    #[test]
    fn card_text_round_trips(seed in any::<u64>()) {
        let card = common::random_card(&mut ChaCha20Rng::seed_from_u64(seed));
        let text = store::render_card(&card).unwrap();
        prop_assert_eq!(store::parse_card(&text).unwrap(), card);
        let upper = format!(
            "authbreak-card v1\nL={}\nr={}\n",
            card.l.to_hex().to_uppercase(),
            hex::encode_upper(card.r.as_bytes())
        );
        prop_assert_eq!(store::parse_card(&upper).unwrap(), card);
    }
}
