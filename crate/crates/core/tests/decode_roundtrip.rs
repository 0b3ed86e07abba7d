//! Randomized decode(encode(params)) = params over the built-in registry,
//! and registry insertion-order independence.

use etrace_core::abi::{decode_log, encode_log, AbiRegistry, DecodedLog, EventAbi};
use etrace_core::ingest::LogEntry;
use etrace_core::H160;
use etrace_testkit::synth::random_params;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

proptest! {
    #[test]
    fn decode_inverts_encode(seed in any::<u64>()) {
        let registry = AbiRegistry::builtin();
        let abis: Vec<&EventAbi> = registry.iter().collect();
        let mut rng = StdRng::seed_from_u64(seed);
        let abi = abis[rng.random_range(0..abis.len())];
        let params = random_params(&mut rng, abi);

        let entry = encode_log(&abi.name, &params, &registry).unwrap();
        match decode_log(&entry, &registry).unwrap() {
            DecodedLog::Event { name, params: decoded } => {
                prop_assert_eq!(name, abi.name.clone());
                prop_assert_eq!(decoded, params);
            }
            DecodedLog::Unknown(_) => prop_assert!(false, "registry event decoded as unknown"),
        }
    }
}

#[test]
fn decoding_ignores_insertion_order() {
    let extension = r#"[
        {"name": "Queued", "params": [{"name": "who", "type": "address", "indexed": true},
                                      {"name": "flag", "type": "bool"}]},
        {"name": "Settled", "params": [{"name": "id", "type": "bytes32", "indexed": true}]}
    ]"#;

    let mut forward = AbiRegistry::builtin();
    forward.load_extension(extension).unwrap();

    let mut reverse = AbiRegistry::new();
    reverse.load_extension(extension).unwrap();
    for abi in AbiRegistry::builtin().iter() {
        reverse.register(abi.clone()).unwrap();
    }

    let mut rng = StdRng::seed_from_u64(7);
    for abi in forward.iter() {
        let params = random_params(&mut rng, abi);
        let mut entry = encode_log(&abi.name, &params, &forward).unwrap();
        entry.address = H160::repeat_byte(3);
        assert_eq!(
            decode_log(&entry, &forward).unwrap(),
            decode_log(&entry, &reverse).unwrap(),
            "{} decodes differently across registries",
            abi.name
        );
    }
}

#[test]
fn decode_is_total_over_arbitrary_topic0() {
    let registry = AbiRegistry::builtin();
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let mut topic = [0u8; 32];
        rng.fill(&mut topic);
        let entry = LogEntry {
            address: H160::repeat_byte(1),
            topics: vec![topic.into()],
            data: vec![0u8; 32 * rng.random_range(0..3usize)],
            log_index: 0,
        };
        // Unknown hashes must degrade to the marker, never error.
        assert!(matches!(
            decode_log(&entry, &registry).unwrap(),
            DecodedLog::Unknown(_)
        ));
    }
}

#[test]
fn extension_event_round_trips_through_registry() {
    let mut registry = AbiRegistry::builtin();
    registry
        .load_extension(
            r#"[{"name": "Borrow", "params": [
                {"name": "from", "type": "address", "indexed": true},
                {"name": "amount", "type": "uint256"}]}]"#,
        )
        .unwrap();
    let abi = registry.get_by_name("Borrow").unwrap().clone();
    let mut rng = StdRng::seed_from_u64(3);
    let params = random_params(&mut rng, &abi);
    let entry = encode_log("Borrow", &params, &registry).unwrap();
    match decode_log(&entry, &registry).unwrap() {
        DecodedLog::Event {
            name,
            params: decoded,
        } => {
            assert_eq!(name, "Borrow");
            assert_eq!(decoded, params);
        }
        other => panic!("expected Borrow, got {other:?}"),
    }
}
