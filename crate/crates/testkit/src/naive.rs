//! Brute-force reference detectors. Each one restates its rule as a plain
//! enumeration (all address pairs, all (name, caller) groups, explicit
//! candidate sets) so the production detectors can be checked against an
//! independent path on randomized traces.

use std::collections::BTreeSet;

use etrace_core::detect::{AttackPatternKind, DetectorConfig, Finding};
use etrace_core::trace::{DecodedEvent, EventOrigin, EventTrace};
use etrace_core::{H160, U256};

/// A finding stripped to the fields the oracles can reproduce; explanation
/// prose is the production detectors' own.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFinding {
    pub kind: AttackPatternKind,
    pub evidence: Vec<usize>,
    pub score: f64,
}

pub fn simplify(findings: &[Finding]) -> Vec<SimpleFinding> {
    findings
        .iter()
        .map(|f| SimpleFinding {
            kind: f.kind,
            evidence: f.evidence.clone(),
            score: f.score,
        })
        .collect()
}

fn transfer_endpoints(event: &DecodedEvent) -> Option<(H160, H160)> {
    if event.name != "Transfer" {
        return None;
    }
    Some((event.from?, event.to?))
}

/// Every unordered address pair, checked one by one against the full trace.
pub fn reentrancy_oracle(trace: &EventTrace, cfg: &DetectorConfig) -> Vec<SimpleFinding> {
    let mut addresses = BTreeSet::new();
    for event in &trace.events {
        if let Some((from, to)) = transfer_endpoints(event) {
            addresses.insert(from);
            addresses.insert(to);
        }
    }
    let addresses: Vec<H160> = addresses.into_iter().collect();

    let mut findings = Vec::new();
    for (i, &a) in addresses.iter().enumerate() {
        for &b in &addresses[i..] {
            let mut evidence = Vec::new();
            let mut froms = Vec::new();
            for event in &trace.events {
                if let Some((from, to)) = transfer_endpoints(event) {
                    if (from == a && to == b) || (from == b && to == a) {
                        evidence.push(event.index);
                        froms.push(from);
                    }
                }
            }
            if evidence.len() < cfg.reentry_min_transfers {
                continue;
            }
            let reversals = froms.windows(2).filter(|w| w[0] != w[1]).count();
            if reversals < cfg.reentry_min_reversals {
                continue;
            }
            findings.push(SimpleFinding {
                kind: AttackPatternKind::Reentrancy,
                evidence,
                score: (reversals as f64 / 4.0).min(1.0),
            });
        }
    }
    findings.sort_by_key(|f| f.evidence[0]);
    findings
}

/// Distinct qualifying values, each gathered by a fresh scan.
pub fn integer_overflow_oracle(trace: &EventTrace, cfg: &DetectorConfig) -> Vec<SimpleFinding> {
    let certain = U256::one() << 255;
    let mut values = BTreeSet::new();
    for event in &trace.events {
        if event.name == "Transfer" {
            if let Some(v) = event.value {
                if v >= cfg.overflow_threshold {
                    values.insert(v);
                }
            }
        }
    }

    let mut findings = Vec::new();
    for value in values {
        let evidence: Vec<usize> = trace
            .events
            .iter()
            .filter(|e| e.name == "Transfer" && e.value == Some(value))
            .map(|e| e.index)
            .collect();
        findings.push(SimpleFinding {
            kind: AttackPatternKind::IntegerOverflow,
            evidence,
            score: if value >= certain { 1.0 } else { 0.8 },
        });
    }
    findings.sort_by_key(|f| f.evidence[0]);
    findings
}

/// Explicit candidate sets for the (loan, swaps, exit) subsequence.
pub fn flash_loan_oracle(trace: &EventTrace, _cfg: &DetectorConfig) -> Vec<SimpleFinding> {
    let loan = trace
        .events
        .iter()
        .find(|e| e.name == "FlashLoan" || e.name == "Borrow");
    let Some(loan) = loan else { return Vec::new() };
    let source = loan.from.unwrap_or(loan.emitter);

    let swaps: BTreeSet<usize> = trace
        .events
        .iter()
        .filter(|e| e.index > loan.index && e.name == "Swap")
        .map(|e| e.index)
        .collect();

    // Exits that have at least one swap strictly between the loan and them.
    let exits: BTreeSet<usize> = trace
        .events
        .iter()
        .filter(|e| {
            e.index > loan.index
                && (e.name == "Withdrawal" || (e.name == "Transfer" && e.to == Some(source)))
                && swaps.iter().any(|s| *s < e.index)
        })
        .map(|e| e.index)
        .collect();

    if let Some(&exit) = exits.iter().next_back() {
        let mut evidence = vec![loan.index];
        evidence.extend(swaps.iter().filter(|s| **s < exit));
        evidence.push(exit);
        return vec![SimpleFinding {
            kind: AttackPatternKind::FlashLoanAttack,
            evidence,
            score: 1.0,
        }];
    }
    if swaps.len() >= 2 {
        let mut evidence = vec![loan.index];
        evidence.extend(&swaps);
        return vec![SimpleFinding {
            kind: AttackPatternKind::FlashLoanAttack,
            evidence,
            score: 0.6,
        }];
    }
    Vec::new()
}

/// Group-by (name, caller) with an explicit non-decreasing-gas scan, plus
/// the gas ceiling sweep.
pub fn dos_oracle(trace: &EventTrace, cfg: &DetectorConfig) -> Vec<SimpleFinding> {
    let mut keys = BTreeSet::new();
    for event in &trace.events {
        if event.origin == EventOrigin::Call {
            if let Some(from) = event.from {
                keys.insert((event.name.clone(), from));
            }
        }
    }

    let mut evidence = BTreeSet::new();
    let mut repeats_fired = false;
    for (name, from) in keys {
        let group: Vec<&DecodedEvent> = trace
            .events
            .iter()
            .filter(|e| {
                e.origin == EventOrigin::Call
                    && e.name == name
                    && e.from == Some(from)
                    && e.value.unwrap_or_default() <= cfg.dos_small_value_max
            })
            .collect();
        if group.len() < cfg.dos_min_repeats {
            continue;
        }
        let monotone = (1..group.len())
            .all(|i| group[i - 1].gas_used.unwrap_or(0) <= group[i].gas_used.unwrap_or(0));
        if monotone {
            repeats_fired = true;
            evidence.extend(group.iter().map(|e| e.index));
        }
    }

    let mut ceiling_fired = false;
    for event in &trace.events {
        if event.gas_used.is_some_and(|g| g > cfg.dos_gas_limit) {
            ceiling_fired = true;
            evidence.insert(event.index);
        }
    }

    if !repeats_fired && !ceiling_fired {
        return Vec::new();
    }
    vec![SimpleFinding {
        kind: AttackPatternKind::Dos,
        evidence: evidence.into_iter().collect(),
        score: if repeats_fired && ceiling_fired {
            1.0
        } else {
            0.7
        },
    }]
}
