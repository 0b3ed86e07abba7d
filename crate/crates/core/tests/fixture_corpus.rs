//! Checks over the shipped fixture corpus: round-trip stability, trace
//! shape per incident, and the detection matrix (each incident fires
//! exactly its own pattern).

use std::path::PathBuf;

use etrace_core::abi::AbiRegistry;
use etrace_core::detect::{run_all_detectors, AttackPatternKind, DetectorConfig};
use etrace_core::ingest::{load_fixture, parse_fixture, receipt_to_fixture};
use etrace_core::trace::{build_trace, format_sci, trace_digest, EventOrigin};
use etrace_core::U256;
use etrace_testkit::synth::random_receipt;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/tx/{name}.json"))
}

const CORPUS: [&str; 5] = ["xsurge", "beautychain", "mevbot", "governmental", "empty"];

#[test]
fn corpus_round_trips_byte_identically() {
    for name in CORPUS {
        let receipt = load_fixture(fixture_path(name)).unwrap();
        let bytes = receipt_to_fixture(&receipt);
        let reloaded = parse_fixture(&bytes).unwrap();
        assert_eq!(reloaded, receipt, "{name}: reload differs");
        assert_eq!(receipt_to_fixture(&reloaded), bytes, "{name}: bytes differ");
    }
}

#[test]
fn corpus_logs_are_strictly_ordered() {
    for name in CORPUS {
        let receipt = load_fixture(fixture_path(name)).unwrap();
        assert!(
            receipt
                .logs
                .windows(2)
                .all(|w| w[0].log_index < w[1].log_index),
            "{name}: log_index not strictly increasing"
        );
    }
}

#[test]
fn reentrancy_fixture_trace_shape() {
    let receipt = load_fixture(fixture_path("xsurge")).unwrap();
    assert_eq!(receipt.logs.len(), 10);
    let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
    assert_eq!(trace.events.len(), 10);
    assert!(trace.events.iter().all(|e| e.name == "Transfer"));
    assert!(trace
        .events
        .iter()
        .all(|e| e.from.is_some() && e.to.is_some() && e.value.is_some()));

    let digest = trace_digest(&trace);
    assert_eq!(digest.events_by_name["Transfer"], 10);
    assert_eq!(digest.distinct_addresses, 3);
    assert_eq!(
        digest.max_value,
        Some(U256::from_dec_str("10030000000000000000000").unwrap())
    );
    assert_eq!(format_sci(digest.max_value.unwrap()), "1.0030e22");
}

#[test]
fn overflow_fixture_trace_shape() {
    let receipt = load_fixture(fixture_path("beautychain")).unwrap();
    assert!(
        receipt.logs.len() >= 2,
        "incident carries two Transfer logs"
    );
    let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
    assert_eq!(trace.events.len(), 2);
    for event in &trace.events {
        assert_eq!(event.name, "Transfer");
        assert_eq!(event.value, Some(U256::one() << 255));
    }
}

#[test]
fn flash_loan_fixture_trace_shape() {
    let receipt = load_fixture(fixture_path("mevbot")).unwrap();
    let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
    assert_eq!(trace.events.len(), 15);
    assert_eq!(trace.events[2].name, "FlashLoan");
    // Stored verbatim; not meaningful as a quantity and unused by detection.
    assert_eq!(trace.events[2].value, Some(U256::one()));
    assert_eq!(trace.events[14].name, "Withdrawal");

    let digest = trace_digest(&trace);
    assert_eq!(digest.max_value, Some(U256::MAX));
    assert_eq!(format_sci(digest.max_value.unwrap()), "1.1579e77");
}

#[test]
fn dos_fixture_trace_shape() {
    let receipt = load_fixture(fixture_path("governmental")).unwrap();
    let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
    assert_eq!(trace.events.len(), 10);
    assert!(trace.events.iter().all(|e| e.origin == EventOrigin::Call));

    let lend_gas: Vec<u64> = trace
        .events
        .iter()
        .filter(|e| e.name == "lendGM")
        .map(|e| e.gas_used.unwrap())
        .collect();
    assert_eq!(
        lend_gas,
        vec![36_855, 2_532_963, 5_057_945, 5_057_945, 5_057_945, 5_057_945]
    );
    assert!(!trace.status.is_success(), "the stuck payout is a failure");
}

#[test]
fn empty_fixture_has_no_events() {
    let receipt = load_fixture(fixture_path("empty")).unwrap();
    let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
    assert!(trace.events.is_empty());
    assert_eq!(trace_digest(&trace).distinct_addresses, 0);
}

#[test]
fn detection_matrix_is_exact() {
    let expected = [
        ("xsurge", Some(AttackPatternKind::Reentrancy)),
        ("beautychain", Some(AttackPatternKind::IntegerOverflow)),
        ("mevbot", Some(AttackPatternKind::FlashLoanAttack)),
        ("governmental", Some(AttackPatternKind::Dos)),
        ("empty", None),
    ];
    let registry = AbiRegistry::builtin();
    let cfg = DetectorConfig::default();
    for (name, want) in expected {
        let receipt = load_fixture(fixture_path(name)).unwrap();
        let trace = build_trace(&receipt, &registry).unwrap();
        let findings = run_all_detectors(&trace, &cfg);
        match want {
            Some(kind) => {
                assert_eq!(findings.len(), 1, "{name}: expected exactly one finding");
                assert_eq!(findings[0].kind, kind, "{name}");
            }
            None => assert!(findings.is_empty(), "{name}: expected no findings"),
        }
    }
}

#[test]
fn reentrancy_evidence_is_the_loop() {
    let receipt = load_fixture(fixture_path("xsurge")).unwrap();
    let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
    let findings = run_all_detectors(&trace, &DetectorConfig::default());
    assert_eq!(findings[0].evidence, vec![1, 2, 3, 4, 5, 6, 7, 8]);
    assert_eq!(findings[0].score, 1.0);
}

#[test]
fn flash_loan_evidence_spans_loan_to_withdrawal() {
    let receipt = load_fixture(fixture_path("mevbot")).unwrap();
    let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
    let findings = run_all_detectors(&trace, &DetectorConfig::default());
    assert_eq!(findings[0].evidence, vec![2, 6, 12, 13, 14]);
}

#[test]
fn dos_evidence_is_the_repeat_run() {
    let receipt = load_fixture(fixture_path("governmental")).unwrap();
    let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
    let findings = run_all_detectors(&trace, &DetectorConfig::default());
    assert_eq!(findings[0].evidence, vec![2, 3, 4, 5, 6]);
    assert_eq!(findings[0].score, 1.0);
    assert!(findings[0].explanation.contains("5057945"));
    assert!(findings[0].explanation.contains("4712388"));
}

#[test]
fn build_trace_is_pure() {
    let receipt = load_fixture(fixture_path("mevbot")).unwrap();
    let registry = AbiRegistry::builtin();
    assert_eq!(
        build_trace(&receipt, &registry).unwrap(),
        build_trace(&receipt, &registry).unwrap()
    );
}

proptest! {
    /// Field-for-field fixture round trip for arbitrary valid receipts,
    /// plus the no-drop guarantee: every log and call record becomes
    /// exactly one trace event.
    #[test]
    fn random_receipts_round_trip(seed in any::<u64>()) {
        let receipt = random_receipt(&mut StdRng::seed_from_u64(seed));
        let bytes = receipt_to_fixture(&receipt);
        let loaded = parse_fixture(&bytes).unwrap();
        prop_assert_eq!(&loaded, &receipt);
        prop_assert_eq!(receipt_to_fixture(&loaded), bytes);

        let trace = build_trace(&receipt, &AbiRegistry::builtin()).unwrap();
        prop_assert_eq!(
            trace.events.len(),
            receipt.logs.len() + receipt.call_records.len()
        );
        for event in &trace.events {
            prop_assert_eq!(event.index, trace.events[event.index].index);
            if event.name == "Transfer" {
                prop_assert!(event.from.is_some() && event.to.is_some() && event.value.is_some());
            }
        }
    }
}
