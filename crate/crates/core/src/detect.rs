//! Deterministic pattern matching of an event trace against four attack
//! shapes: reentrancy loops, integer-overflow values, flash-loan swap
//! sequences, and gas-exhaustion DoS. Detectors are pure functions of
//! `(trace, config)` and never consult an LLM.

use std::collections::BTreeMap;
use std::fmt;

use primitive_types::{H160, U256};
use serde::{Deserialize, Serialize};

use crate::trace::{format_sci, short_addr, DecodedEvent, EventOrigin, EventTrace};

/// The closed set of attack patterns this tool recognizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackPatternKind {
    Reentrancy,
    IntegerOverflow,
    FlashLoanAttack,
    Dos,
}

impl AttackPatternKind {
    pub const ALL: [AttackPatternKind; 4] = [
        AttackPatternKind::Reentrancy,
        AttackPatternKind::IntegerOverflow,
        AttackPatternKind::FlashLoanAttack,
        AttackPatternKind::Dos,
    ];

    /// Human-facing label used in text reports.
    pub fn label(self) -> &'static str {
        match self {
            AttackPatternKind::Reentrancy => "Reentrancy",
            AttackPatternKind::IntegerOverflow => "Integer Overflow",
            AttackPatternKind::FlashLoanAttack => "Flash Loan Attack",
            AttackPatternKind::Dos => "DoS",
        }
    }
}

impl fmt::Display for AttackPatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Detection thresholds. Every threshold is explicit and overridable; in
/// particular the overflow value threshold, so that large-but-ordinary
/// token amounts do not read as overflows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorConfig {
    /// Transfer values at or above this count as overflow suspects.
    pub overflow_threshold: U256,
    /// Minimum transfers between one address pair for a reentrancy loop.
    pub reentry_min_transfers: usize,
    /// Minimum from/to direction reversals within those transfers.
    pub reentry_min_reversals: usize,
    /// Gas ceiling; any event burning more than this is flagged.
    pub dos_gas_limit: u64,
    /// Minimum repeated calls for the DoS repetition rule.
    pub dos_min_repeats: usize,
    /// Repetition rule only considers calls at or below this value (wei).
    pub dos_small_value_max: U256,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            overflow_threshold: U256::one() << 250,
            reentry_min_transfers: 4,
            reentry_min_reversals: 2,
            dos_gas_limit: 4_712_388,
            dos_min_repeats: 3,
            dos_small_value_max: U256::from(10u64).pow(U256::from(16u8)),
        }
    }
}

impl DetectorConfig {
    /// All thresholds strictly positive, and the reentrancy minimums at or
    /// above their floor values (2 transfers, 1 reversal).
    pub fn validate(&self) -> Result<(), String> {
        if self.overflow_threshold.is_zero() {
            return Err("overflow_threshold must be positive".into());
        }
        if self.reentry_min_transfers < 2 {
            return Err("reentry_min_transfers must be at least 2".into());
        }
        if self.reentry_min_reversals < 1 {
            return Err("reentry_min_reversals must be at least 1".into());
        }
        if self.dos_gas_limit == 0 {
            return Err("dos_gas_limit must be positive".into());
        }
        if self.dos_min_repeats == 0 {
            return Err("dos_min_repeats must be positive".into());
        }
        if self.dos_small_value_max.is_zero() {
            return Err("dos_small_value_max must be positive".into());
        }
        Ok(())
    }
}

/// One detector hit: which pattern, which events prove it, how strongly.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub kind: AttackPatternKind,
    /// Trace indices of the events that satisfy the pattern.
    pub evidence: Vec<usize>,
    /// Confidence in [0, 1].
    pub score: f64,
    pub explanation: String,
}

fn is_transfer(event: &DecodedEvent) -> bool {
    event.name == "Transfer"
}

/// Reentrancy: for each unordered address pair, the Transfer events between
/// the two must number at least `reentry_min_transfers` and flip direction
/// at least `reentry_min_reversals` times. Repeated same-direction payouts
/// never fire; the signature is the back-and-forth loop.
pub fn detect_reentrancy(trace: &EventTrace, cfg: &DetectorConfig) -> Vec<Finding> {
    // Keyed by (lower, higher) address; direction = "from == lower".
    let mut pairs: BTreeMap<(H160, H160), Vec<(usize, bool)>> = BTreeMap::new();
    for event in &trace.events {
        if !is_transfer(event) {
            continue;
        }
        let (Some(from), Some(to)) = (event.from, event.to) else {
            continue;
        };
        let key = if from <= to { (from, to) } else { (to, from) };
        pairs
            .entry(key)
            .or_default()
            .push((event.index, from == key.0));
    }

    let mut findings = Vec::new();
    for ((a, b), hits) in pairs {
        if hits.len() < cfg.reentry_min_transfers {
            continue;
        }
        let reversals = hits.windows(2).filter(|w| w[0].1 != w[1].1).count();
        if reversals < cfg.reentry_min_reversals {
            continue;
        }
        let evidence: Vec<usize> = hits.iter().map(|(i, _)| *i).collect();
        findings.push(Finding {
            kind: AttackPatternKind::Reentrancy,
            explanation: format!(
                "{} transfers between {} and {} reverse direction {} times, forming a loop",
                evidence.len(),
                short_addr(a),
                short_addr(b),
                reversals
            ),
            evidence,
            score: (reversals as f64 / 4.0).min(1.0),
        });
    }
    findings.sort_by_key(|f| f.evidence[0]);
    findings
}

/// Integer overflow: Transfer values at or above the configured threshold.
/// Approval values are exempt (max-uint approvals are a benign idiom), and
/// hits carrying the same value merge into one finding.
pub fn detect_integer_overflow(trace: &EventTrace, cfg: &DetectorConfig) -> Vec<Finding> {
    let certain = U256::one() << 255;
    let mut by_value: BTreeMap<U256, Vec<usize>> = BTreeMap::new();
    for event in &trace.events {
        if !is_transfer(event) {
            continue;
        }
        let Some(value) = event.value else { continue };
        if value >= cfg.overflow_threshold {
            by_value.entry(value).or_default().push(event.index);
        }
    }

    let mut findings: Vec<Finding> = by_value
        .into_iter()
        .map(|(value, evidence)| Finding {
            kind: AttackPatternKind::IntegerOverflow,
            explanation: format!(
                "{} Transfer event(s) carry the anomalous value {} (threshold {})",
                evidence.len(),
                format_sci(value),
                format_sci(cfg.overflow_threshold)
            ),
            evidence,
            score: if value >= certain { 1.0 } else { 0.8 },
        })
        .collect();
    findings.sort_by_key(|f| f.evidence[0]);
    findings
}

fn is_loan_start(event: &DecodedEvent) -> bool {
    event.name == "FlashLoan" || event.name == "Borrow"
}

/// The loan source funds come back to when repayment shows up as a plain
/// Transfer: the loan event's `from`, falling back to its emitter.
fn loan_source(event: &DecodedEvent) -> H160 {
    event.from.unwrap_or(event.emitter)
}

fn is_loan_exit(event: &DecodedEvent, source: H160) -> bool {
    event.name == "Withdrawal" || (is_transfer(event) && event.to == Some(source))
}

/// Flash loan: a FlashLoan (or Borrow) event, at least one later Swap, and
/// a still-later Withdrawal (or a Transfer returning funds to the loan
/// source). The first loan event anchors the match; the last qualifying
/// exit closes it, so every Swap in between is evidence. Without an exit,
/// two or more Swaps after the loan still score 0.6.
pub fn detect_flash_loan(trace: &EventTrace, cfg: &DetectorConfig) -> Vec<Finding> {
    let _ = cfg;
    let Some(start) = trace.events.iter().position(is_loan_start) else {
        return Vec::new();
    };
    let source = loan_source(&trace.events[start]);
    let first_swap = trace.events[start + 1..]
        .iter()
        .position(|e| e.name == "Swap")
        .map(|offset| start + 1 + offset);
    let Some(first_swap) = first_swap else {
        return Vec::new();
    };

    let exit = trace.events[first_swap + 1..]
        .iter()
        .rev()
        .position(|e| is_loan_exit(e, source))
        .map(|rev_offset| trace.events.len() - 1 - rev_offset);

    match exit {
        Some(exit) => {
            let swaps: Vec<usize> = trace.events[start + 1..exit]
                .iter()
                .filter(|e| e.name == "Swap")
                .map(|e| e.index)
                .collect();
            let mut evidence = vec![start];
            evidence.extend(&swaps);
            evidence.push(exit);
            let exit_event = &trace.events[exit];
            let withdrawn = exit_event
                .value
                .map(|v| format!("; withdrawn value {}", format_sci(v)))
                .unwrap_or_default();
            Vec::from([Finding {
                kind: AttackPatternKind::FlashLoanAttack,
                explanation: format!(
                    "{} at event {start} is followed by {} Swap(s) and a terminal {} at event {exit}{withdrawn}",
                    trace.events[start].name,
                    swaps.len(),
                    exit_event.name,
                ),
                evidence,
                score: 1.0,
            }])
        }
        None => {
            let swaps: Vec<usize> = trace.events[start + 1..]
                .iter()
                .filter(|e| e.name == "Swap")
                .map(|e| e.index)
                .collect();
            if swaps.len() < 2 {
                return Vec::new();
            }
            let mut evidence = vec![start];
            evidence.extend(&swaps);
            Vec::from([Finding {
                kind: AttackPatternKind::FlashLoanAttack,
                explanation: format!(
                    "{} at event {start} is followed by {} Swaps with no terminal withdrawal",
                    trace.events[start].name,
                    swaps.len(),
                ),
                evidence,
                score: 0.6,
            }])
        }
    }
}

/// DoS, two sub-rules, either sufficient:
/// (a) repetition: `dos_min_repeats` or more call-origin events sharing
///     name and caller, each at or below `dos_small_value_max`, with
///     non-decreasing gas, i.e. cheap calls steadily inflating state;
/// (b) gas ceiling: any event burning more than `dos_gas_limit`.
/// Fires at most one finding; evidence is the union of matched indices.
pub fn detect_dos(trace: &EventTrace, cfg: &DetectorConfig) -> Vec<Finding> {
    let mut groups: BTreeMap<(&str, H160), Vec<usize>> = BTreeMap::new();
    for event in &trace.events {
        if event.origin != EventOrigin::Call {
            continue;
        }
        let Some(from) = event.from else { continue };
        if event.value.unwrap_or_default() > cfg.dos_small_value_max {
            continue;
        }
        groups
            .entry((event.name.as_str(), from))
            .or_default()
            .push(event.index);
    }

    let mut repeat_evidence: Vec<usize> = Vec::new();
    let mut repeat_notes: Vec<String> = Vec::new();
    for ((name, from), indices) in groups {
        if indices.len() < cfg.dos_min_repeats {
            continue;
        }
        let gas: Vec<u64> = indices
            .iter()
            .map(|i| trace.events[*i].gas_used.unwrap_or(0))
            .collect();
        if gas.windows(2).any(|w| w[0] > w[1]) {
            continue;
        }
        repeat_notes.push(format!(
            "{} repeated `{name}` calls from {} with gas climbing {}→{}",
            indices.len(),
            short_addr(from),
            gas.first().copied().unwrap_or(0),
            gas.last().copied().unwrap_or(0),
        ));
        repeat_evidence.extend(indices);
    }

    let over_limit: Vec<usize> = trace
        .events
        .iter()
        .filter(|e| e.gas_used.is_some_and(|g| g > cfg.dos_gas_limit))
        .map(|e| e.index)
        .collect();

    if repeat_evidence.is_empty() && over_limit.is_empty() {
        return Vec::new();
    }

    let mut notes = repeat_notes;
    if let Some(max_gas) = over_limit
        .iter()
        .filter_map(|i| trace.events[*i].gas_used)
        .max()
    {
        notes.push(format!(
            "gas {max_gas} exceeds the transaction limit of {}",
            cfg.dos_gas_limit
        ));
    }

    let both = !repeat_evidence.is_empty() && !over_limit.is_empty();
    let mut evidence = repeat_evidence;
    evidence.extend(over_limit);
    evidence.sort_unstable();
    evidence.dedup();

    vec![Finding {
        kind: AttackPatternKind::Dos,
        evidence,
        score: if both { 1.0 } else { 0.7 },
        explanation: notes.join("; "),
    }]
}

/// Runs the four detectors and merges their findings, ordered by
/// (first evidence index, kind).
pub fn run_all_detectors(trace: &EventTrace, cfg: &DetectorConfig) -> Vec<Finding> {
    let mut findings = detect_reentrancy(trace, cfg);
    findings.extend(detect_integer_overflow(trace, cfg));
    findings.extend(detect_flash_loan(trace, cfg));
    findings.extend(detect_dos(trace, cfg));
    findings.sort_by_key(|f| (f.evidence[0], f.kind));
    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{TxHash, TxStatus};
    use std::collections::BTreeMap;
    use std::str::FromStr;

    fn addr(n: u8) -> H160 {
        H160::repeat_byte(n)
    }

    fn event(
        index: usize,
        name: &str,
        from: Option<H160>,
        to: Option<H160>,
        value: u64,
    ) -> DecodedEvent {
        DecodedEvent {
            index,
            name: name.to_string(),
            emitter: addr(0xee),
            from,
            to,
            value: Some(U256::from(value)),
            gas_used: None,
            origin: EventOrigin::Log,
            extra: BTreeMap::new(),
        }
    }

    fn call(index: usize, name: &str, from: H160, value: U256, gas: u64) -> DecodedEvent {
        DecodedEvent {
            index,
            name: name.to_string(),
            emitter: addr(0xfe),
            from: Some(from),
            to: Some(addr(0xfe)),
            value: Some(value),
            gas_used: Some(gas),
            origin: EventOrigin::Call,
            extra: BTreeMap::new(),
        }
    }

    fn trace_of(events: Vec<DecodedEvent>) -> EventTrace {
        EventTrace {
            tx_hash: TxHash::from_str(
                "0x0000000000000000000000000000000000000000000000000000000000000001",
            )
            .unwrap(),
            status: TxStatus::Success,
            gas_used_total: 0,
            events,
        }
    }

    #[test]
    fn single_transfer_is_not_reentrancy() {
        let trace = trace_of(vec![event(0, "Transfer", Some(addr(1)), Some(addr(2)), 5)]);
        assert!(detect_reentrancy(&trace, &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn alternating_pair_fires() {
        let (a, b) = (addr(1), addr(2));
        let trace = trace_of(vec![
            event(0, "Transfer", Some(a), Some(b), 1),
            event(1, "Transfer", Some(b), Some(a), 2),
            event(2, "Transfer", Some(a), Some(b), 3),
            event(3, "Transfer", Some(b), Some(a), 4),
        ]);
        let findings = detect_reentrancy(&trace, &DetectorConfig::default());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].evidence, vec![0, 1, 2, 3]);
        // Three reversals over four transfers.
        assert!((findings[0].score - 0.75).abs() < 1e-12);
    }

    #[test]
    fn same_direction_batch_payout_does_not_fire() {
        let (a, b) = (addr(1), addr(2));
        let trace = trace_of(
            (0..6)
                .map(|i| event(i, "Transfer", Some(a), Some(b), i as u64 + 1))
                .collect(),
        );
        assert!(detect_reentrancy(&trace, &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn overflow_merges_equal_values() {
        let huge = U256::one() << 255;
        let mut e0 = event(0, "Transfer", Some(addr(1)), Some(addr(2)), 0);
        e0.value = Some(huge);
        let mut e1 = event(1, "Transfer", Some(addr(1)), Some(addr(3)), 0);
        e1.value = Some(huge);
        let trace = trace_of(vec![e0, e1]);
        let findings = detect_integer_overflow(&trace, &DetectorConfig::default());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].evidence, vec![0, 1]);
        assert_eq!(findings[0].score, 1.0);
    }

    #[test]
    fn approval_is_exempt_from_overflow() {
        let mut e0 = event(0, "Approval", Some(addr(1)), Some(addr(2)), 0);
        e0.value = Some(U256::MAX);
        let trace = trace_of(vec![e0]);
        assert!(detect_integer_overflow(&trace, &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn below_certain_threshold_scores_lower() {
        let mut e0 = event(0, "Transfer", Some(addr(1)), Some(addr(2)), 0);
        e0.value = Some(U256::one() << 251);
        let trace = trace_of(vec![e0]);
        let findings = detect_integer_overflow(&trace, &DetectorConfig::default());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].score, 0.8);
    }

    #[test]
    fn swaps_without_flash_loan_do_not_fire() {
        let trace = trace_of(vec![
            event(0, "Swap", None, None, 0),
            event(1, "Swap", None, None, 0),
            event(2, "Withdrawal", Some(addr(1)), None, 9),
        ]);
        assert!(detect_flash_loan(&trace, &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn full_loan_swap_withdrawal_sequence_fires() {
        let trace = trace_of(vec![
            event(0, "FlashLoan", Some(addr(0)), Some(addr(9)), 1),
            event(1, "Transfer", Some(addr(2)), Some(addr(3)), 7),
            event(2, "Swap", Some(addr(3)), None, 0),
            event(3, "Swap", Some(addr(3)), None, 0),
            event(4, "Withdrawal", Some(addr(3)), None, 42),
        ]);
        let findings = detect_flash_loan(&trace, &DetectorConfig::default());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].evidence, vec![0, 2, 3, 4]);
        assert_eq!(findings[0].score, 1.0);
        assert!(findings[0].explanation.contains("withdrawn value 4.2000e1"));
    }

    #[test]
    fn missing_exit_with_two_swaps_scores_point_six() {
        let trace = trace_of(vec![
            event(0, "Borrow", Some(addr(0)), Some(addr(9)), 1),
            event(1, "Swap", None, None, 0),
            event(2, "Swap", None, None, 0),
        ]);
        let findings = detect_flash_loan(&trace, &DetectorConfig::default());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].score, 0.6);
        assert_eq!(findings[0].evidence, vec![0, 1, 2]);
    }

    #[test]
    fn transfer_back_to_loan_source_counts_as_exit() {
        let source = addr(7);
        let trace = trace_of(vec![
            event(0, "FlashLoan", Some(source), Some(addr(9)), 1),
            event(1, "Swap", None, None, 0),
            event(2, "Transfer", Some(addr(9)), Some(source), 5),
        ]);
        let findings = detect_flash_loan(&trace, &DetectorConfig::default());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].evidence, vec![0, 1, 2]);
        assert_eq!(findings[0].score, 1.0);
    }

    #[test]
    fn one_expensive_benign_call_does_not_fire() {
        let trace = trace_of(vec![call(
            0,
            "claim",
            addr(1),
            U256::from(10u64).pow(U256::from(18u8)),
            750_000,
        )]);
        assert!(detect_dos(&trace, &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn repeats_and_ceiling_together_score_one() {
        let small = U256::from(10u64).pow(U256::from(15u8));
        let trace = trace_of(vec![
            call(0, "lendGM", addr(1), small, 2_532_963),
            call(1, "lendGM", addr(1), small, 5_057_945),
            call(2, "lendGM", addr(1), small, 5_057_945),
        ]);
        let findings = detect_dos(&trace, &DetectorConfig::default());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].score, 1.0);
        assert_eq!(findings[0].evidence, vec![0, 1, 2]);
        assert!(findings[0].explanation.contains("4712388"));
    }

    #[test]
    fn decreasing_gas_breaks_the_repetition_rule() {
        let small = U256::from(100u64);
        let trace = trace_of(vec![
            call(0, "lendGM", addr(1), small, 3_000_000),
            call(1, "lendGM", addr(1), small, 2_000_000),
            call(2, "lendGM", addr(1), small, 2_500_000),
        ]);
        assert!(detect_dos(&trace, &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn expensive_calls_fire_ceiling_only() {
        let trace = trace_of(vec![call(0, "cleanup", addr(1), U256::zero(), 5_000_000)]);
        let findings = detect_dos(&trace, &DetectorConfig::default());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].score, 0.7);
    }

    #[test]
    fn run_all_is_deterministic_and_ordered() {
        let huge = U256::one() << 255;
        let mut overflow = event(9, "Transfer", Some(addr(5)), Some(addr(6)), 0);
        overflow.value = Some(huge);
        overflow.index = 9;
        let (a, b) = (addr(1), addr(2));
        let mut events: Vec<DecodedEvent> = (0..4)
            .map(|i| {
                let (f, t) = if i % 2 == 0 { (a, b) } else { (b, a) };
                event(i, "Transfer", Some(f), Some(t), 1)
            })
            .collect();
        events.push(overflow);
        let trace = trace_of(events);
        let cfg = DetectorConfig::default();
        let first = run_all_detectors(&trace, &cfg);
        let second = run_all_detectors(&trace, &cfg);
        assert_eq!(first, second);
        assert_eq!(first.len(), 2);
        assert_eq!(first[0].kind, AttackPatternKind::Reentrancy);
        assert_eq!(first[1].kind, AttackPatternKind::IntegerOverflow);
    }

    #[test]
    fn empty_trace_yields_no_findings() {
        let trace = trace_of(vec![]);
        assert!(run_all_detectors(&trace, &DetectorConfig::default()).is_empty());
    }
}
