//! End-to-end checks of the prompt → mock backend → parsed report path,
//! including the head+tail truncation rule recomputed independently.

use std::path::PathBuf;

use etrace_core::abi::AbiRegistry;
use etrace_core::detect::AttackPatternKind;
use etrace_core::ingest::load_fixture;
use etrace_core::llm::{
    analyze, build_prompt, default_conditions, parse_report, MockBackend, RetryPolicy,
    DEFAULT_PROMPT_BUDGET,
};
use etrace_core::trace::{build_trace, event_line, EventTrace};

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn incident_trace(name: &str) -> EventTrace {
    let receipt = load_fixture(repo_path(&format!("fixtures/tx/{name}.json"))).unwrap();
    build_trace(&receipt, &AbiRegistry::builtin()).unwrap()
}

#[test]
fn conditions_cover_all_four_kinds_once() {
    let conditions = default_conditions();
    assert_eq!(conditions.len(), 4);
    for kind in AttackPatternKind::ALL {
        assert_eq!(conditions.iter().filter(|c| c.kind == kind).count(), 1);
    }
    let reentrancy = &conditions[0];
    assert!(reentrancy
        .condition_text
        .contains("exploiting external calls before state updates"));
}

#[test]
fn prompt_sections_appear_in_order() {
    let trace = incident_trace("xsurge");
    let bundle = build_prompt(&trace, &default_conditions(), DEFAULT_PROMPT_BUDGET).unwrap();
    let prompt = bundle.assemble();
    let instructions = prompt.find("No contract source code is available").unwrap();
    let conditions = prompt.find("Vulnerability conditions:").unwrap();
    let events = prompt
        .find("Events (index name addresses value gas):")
        .unwrap();
    let directive = prompt.find("Explain each event").unwrap();
    assert!(instructions < conditions && conditions < events && events < directive);
    assert_eq!(bundle.event_lines.len(), trace.events.len());
}

/// Independent recomputation of the truncation rule on the fifteen-event
/// flash-loan trace: a budget sized for six surviving lines must keep the
/// first three and last three with one marker between them.
#[test]
fn truncation_rule_keeps_first_and_last_halves() {
    let trace = incident_trace("mevbot");
    let conditions = default_conditions();
    let lines: Vec<String> = trace.events.iter().map(event_line).collect();
    assert_eq!(lines.len(), 15);

    let chars = |s: &str| s.chars().count();
    let block_len = |kept: &[String]| {
        kept.iter()
            .map(|l| chars(l) + 1)
            .sum::<usize>()
            .saturating_sub(1)
    };

    let full = build_prompt(&trace, &conditions, usize::MAX).unwrap();
    let overhead = chars(&full.assemble()) - block_len(&lines);

    let kept_for = |k: usize| {
        let head = k.div_ceil(2);
        let tail = k - head;
        let mut kept = lines[..head].to_vec();
        kept.push(format!("... ({} events elided) ...", 15 - k));
        kept.extend_from_slice(&lines[15 - tail..]);
        kept
    };
    let budget = overhead + block_len(&kept_for(6));
    assert!(
        overhead + block_len(&kept_for(7)) > budget,
        "budget must exclude k=7"
    );

    let bundle = build_prompt(&trace, &conditions, budget).unwrap();
    assert_eq!(bundle.elided_events, 9);
    assert_eq!(bundle.event_lines, kept_for(6));
    assert_eq!(bundle.event_lines[..3], lines[..3]);
    assert_eq!(bundle.event_lines[4..], lines[12..]);
}

#[test]
fn mock_pipeline_recovers_expected_claims() {
    let expected = [
        ("xsurge", AttackPatternKind::Reentrancy),
        ("beautychain", AttackPatternKind::IntegerOverflow),
        ("mevbot", AttackPatternKind::FlashLoanAttack),
        ("governmental", AttackPatternKind::Dos),
    ];
    let backend = MockBackend::new(repo_path("fixtures/llm")).unwrap();
    let conditions = default_conditions();
    let policy = RetryPolicy::default();

    for (name, kind) in expected {
        let trace = incident_trace(name);
        let bundle = build_prompt(&trace, &conditions, DEFAULT_PROMPT_BUDGET).unwrap();
        let raw = analyze(&bundle, &backend, &policy).unwrap();
        let report = parse_report(&raw, &trace).unwrap();
        assert_eq!(report.claimed, vec![kind], "{name}");
        assert!(!report.summary.is_empty(), "{name}");
        assert!(!report.pattern_analysis.is_empty(), "{name}");
        assert!(!report.further_recommendation.is_empty(), "{name}");
        assert!(!report.per_event.is_empty(), "{name}");
        assert!(report
            .per_event
            .iter()
            .all(|(i, _)| *i < trace.events.len()));
    }
}

#[test]
fn unknown_prompt_gets_parseable_no_claim_response() {
    let backend = MockBackend::new(repo_path("fixtures/llm")).unwrap();
    let trace = incident_trace("empty");
    let bundle = build_prompt(&trace, &default_conditions(), DEFAULT_PROMPT_BUDGET).unwrap();
    let raw = analyze(&bundle, &backend, &RetryPolicy::default()).unwrap();
    let report = parse_report(&raw, &trace).unwrap();
    assert!(report.claimed.is_empty());
}

#[test]
fn mock_pipeline_is_deterministic_end_to_end() {
    let backend = MockBackend::new(repo_path("fixtures/llm")).unwrap();
    let trace = incident_trace("xsurge");
    let conditions = default_conditions();
    let run = || {
        let bundle = build_prompt(&trace, &conditions, DEFAULT_PROMPT_BUDGET).unwrap();
        analyze(&bundle, &backend, &RetryPolicy::default()).unwrap()
    };
    assert_eq!(run(), run());
}
