//! Cross-validated verdicts and report rendering. The detectors and the
//! LLM stage each claim a set of attack kinds; neither side is treated as
//! authoritative, so the verdict records agreement and one-sided claims
//! separately. Rendering covers a human text form and a machine JSON form
//! with stable key ordering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{AttackPatternKind, Finding};
use crate::llm::AnalysisReport;
use crate::trace::{address_column, format_sci, EventTrace, TraceDigest};

/// Format version of the machine report document.
pub const REPORT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindStatus {
    /// Detector and LLM agree the pattern is present.
    Confirmed,
    DetectorOnly,
    LlmOnly,
    Absent,
}

impl KindStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            KindStatus::Confirmed => "confirmed",
            KindStatus::DetectorOnly => "detector-only",
            KindStatus::LlmOnly => "llm-only",
            KindStatus::Absent => "absent",
        }
    }

    /// Statuses that flip the exit code: the detectors stand behind them.
    pub fn is_actionable(self) -> bool {
        matches!(self, KindStatus::Confirmed | KindStatus::DetectorOnly)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    /// One entry per attack kind, in kind order.
    pub statuses: Vec<(AttackPatternKind, KindStatus)>,
    pub findings: Vec<Finding>,
    pub report: Option<AnalysisReport>,
    /// Raw LLM output preserved when it had none of the three sections.
    pub unparsed_llm_output: Option<String>,
    pub digest: TraceDigest,
}

impl Verdict {
    pub fn status(&self, kind: AttackPatternKind) -> KindStatus {
        self.statuses
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, s)| *s)
            .expect("statuses cover every kind")
    }

    pub fn any_actionable(&self) -> bool {
        self.statuses.iter().any(|(_, s)| s.is_actionable())
    }
}

/// Combines detector findings with the (optional) LLM claim set. With no
/// LLM report, statuses are limited to detector-only and absent.
pub fn cross_validate(
    findings: Vec<Finding>,
    report: Option<AnalysisReport>,
    unparsed_llm_output: Option<String>,
    digest: TraceDigest,
) -> Verdict {
    let statuses = AttackPatternKind::ALL
        .into_iter()
        .map(|kind| {
            let detected = findings.iter().any(|f| f.kind == kind);
            let claimed = report.as_ref().is_some_and(|r| r.claims(kind));
            let status = match (detected, claimed) {
                (true, true) => KindStatus::Confirmed,
                (true, false) => KindStatus::DetectorOnly,
                (false, true) => KindStatus::LlmOnly,
                (false, false) => KindStatus::Absent,
            };
            (kind, status)
        })
        .collect();
    Verdict {
        statuses,
        findings,
        report,
        unparsed_llm_output,
        digest,
    }
}

fn recommendation(kind: AttackPatternKind) -> &'static str {
    match kind {
        AttackPatternKind::Reentrancy => {
            "Apply a reentrancy guard and settle internal balances before external calls."
        }
        AttackPatternKind::IntegerOverflow => {
            "Use checked arithmetic for balance math and validate input magnitudes."
        }
        AttackPatternKind::FlashLoanAttack => {
            "Harden price-sensitive paths against loan-funded swings within one transaction."
        }
        AttackPatternKind::Dos => "Bound loops over growable state and prefer pull-style payouts.",
    }
}

/// Human text report: header, per-kind verdict, the three analysis
/// sections, and an evidence table covering every cited event.
pub fn render_text(verdict: &Verdict, trace: &EventTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "transaction {}", trace.tx_hash);
    let _ = writeln!(
        out,
        "status: {}   gas used: {}",
        trace.status.as_str(),
        trace.gas_used_total
    );
    let by_name: Vec<String> = verdict
        .digest
        .events_by_name
        .iter()
        .map(|(name, count)| format!("{name}: {count}"))
        .collect();
    let _ = writeln!(
        out,
        "events: {} ({})   distinct addresses: {}   max value: {}",
        verdict.digest.event_count,
        by_name.join(", "),
        verdict.digest.distinct_addresses,
        verdict
            .digest
            .max_value
            .map_or_else(|| "-".to_string(), format_sci),
    );
    out.push('\n');

    out.push_str("verdict:\n");
    for (kind, status) in &verdict.statuses {
        let _ = writeln!(out, "  {:<18} {}", kind.label(), status.as_str());
    }
    out.push('\n');

    let detected: Vec<&Finding> = verdict.findings.iter().collect();

    out.push_str("Summary\n");
    match verdict.report.as_ref().filter(|r| !r.summary.is_empty()) {
        Some(r) => {
            let _ = writeln!(out, "  {}", r.summary.replace('\n', "\n  "));
        }
        None if detected.is_empty() => out.push_str("  No patterns detected.\n"),
        None => {
            let kinds: Vec<&str> = {
                let mut seen = Vec::new();
                for f in &detected {
                    if !seen.contains(&f.kind.label()) {
                        seen.push(f.kind.label());
                    }
                }
                seen
            };
            let _ = writeln!(out, "  Detected patterns: {}.", kinds.join(", "));
        }
    }

    out.push_str("\nPattern Analysis\n");
    if let Some(r) = verdict
        .report
        .as_ref()
        .filter(|r| !r.pattern_analysis.is_empty())
    {
        let _ = writeln!(out, "  {}", r.pattern_analysis.replace('\n', "\n  "));
    }
    if detected.is_empty() {
        out.push_str("  No detector fired.\n");
    } else {
        for f in &detected {
            let _ = writeln!(
                out,
                "  - {} (score {:.2}), events {:?}: {}",
                f.kind.label(),
                f.score,
                f.evidence,
                f.explanation
            );
        }
    }

    out.push_str("\nFurther Recommendation\n");
    match verdict
        .report
        .as_ref()
        .filter(|r| !r.further_recommendation.is_empty())
    {
        Some(r) => {
            let _ = writeln!(out, "  {}", r.further_recommendation.replace('\n', "\n  "));
        }
        None if detected.is_empty() => {
            out.push_str("  No remediation required; continue monitoring.\n")
        }
        None => {
            let mut seen = Vec::new();
            for f in &detected {
                if !seen.contains(&f.kind) {
                    seen.push(f.kind);
                    let _ = writeln!(out, "  {}", recommendation(f.kind));
                }
            }
        }
    }

    let mut cited: Vec<usize> = verdict
        .findings
        .iter()
        .flat_map(|f| f.evidence.iter().copied())
        .collect();
    cited.sort_unstable();
    cited.dedup();
    if !cited.is_empty() {
        out.push_str("\nevidence:\n");
        let _ = writeln!(
            out,
            "  {:<6} {:<18} {:<22} {:<12} gas",
            "index", "name", "address", "value"
        );
        for i in cited {
            let e = &trace.events[i];
            let _ = writeln!(
                out,
                "  {:<6} {:<18} {:<22} {:<12} {}",
                e.index,
                e.name,
                address_column(e),
                e.value.map_or_else(|| "-".to_string(), format_sci),
                e.gas_used
                    .map_or_else(|| "-".to_string(), |g| g.to_string()),
            );
        }
    }

    if let Some(raw) = &verdict.unparsed_llm_output {
        out.push_str("\nappendix: unparsed analysis output\n");
        let _ = writeln!(out, "  {}", raw.replace('\n', "\n  "));
    }

    out
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("machine report does not parse: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Machine report document. Field order is the serialization order, so a
/// given tool version renders byte-identical documents for equal verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineReport {
    pub version: String,
    pub tx_hash: String,
    pub status: String,
    pub verdicts: Vec<MachineVerdict>,
    pub findings: Vec<MachineFinding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<MachineAnalysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unparsed_llm_output: Option<String>,
    pub digest: MachineDigest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineVerdict {
    pub kind: AttackPatternKind,
    pub status: KindStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineFinding {
    pub kind: AttackPatternKind,
    pub evidence: Vec<usize>,
    pub score: f64,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineAnalysis {
    pub summary: String,
    pub pattern_analysis: String,
    pub claimed: Vec<AttackPatternKind>,
    pub further_recommendation: String,
    pub per_event: Vec<MachineEventNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineEventNote {
    pub index: usize,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineDigest {
    pub event_count: usize,
    pub events_by_name: std::collections::BTreeMap<String, usize>,
    pub distinct_addresses: usize,
    /// Decimal string; may exceed 64-bit range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gas_used: Option<u64>,
    pub gas_used_total: u64,
}

impl MachineReport {
    pub fn from_verdict(verdict: &Verdict, trace: &EventTrace) -> Self {
        MachineReport {
            version: REPORT_VERSION.to_string(),
            tx_hash: trace.tx_hash.to_string(),
            status: trace.status.as_str().to_string(),
            verdicts: verdict
                .statuses
                .iter()
                .map(|(kind, status)| MachineVerdict {
                    kind: *kind,
                    status: *status,
                })
                .collect(),
            findings: verdict
                .findings
                .iter()
                .map(|f| MachineFinding {
                    kind: f.kind,
                    evidence: f.evidence.clone(),
                    score: f.score,
                    explanation: f.explanation.clone(),
                })
                .collect(),
            report: verdict.report.as_ref().map(|r| MachineAnalysis {
                summary: r.summary.clone(),
                pattern_analysis: r.pattern_analysis.clone(),
                claimed: r.claimed.clone(),
                further_recommendation: r.further_recommendation.clone(),
                per_event: r
                    .per_event
                    .iter()
                    .map(|(index, explanation)| MachineEventNote {
                        index: *index,
                        explanation: explanation.clone(),
                    })
                    .collect(),
            }),
            unparsed_llm_output: verdict.unparsed_llm_output.clone(),
            digest: MachineDigest {
                event_count: verdict.digest.event_count,
                events_by_name: verdict.digest.events_by_name.clone(),
                distinct_addresses: verdict.digest.distinct_addresses,
                max_value: verdict.digest.max_value.map(|v| v.to_string()),
                max_gas_used: verdict.digest.max_gas_used,
                gas_used_total: verdict.digest.gas_used_total,
            },
        }
    }

    /// Canonical byte form: pretty JSON with a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serialization is infallible");
        out.push(b'\n');
        out
    }

    /// Reader for the machine format; `parse(to_bytes())` is lossless.
    pub fn parse(bytes: &[u8]) -> Result<Self, ReportError> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// Renders the verdict in the requested format as bytes for stdout.
pub fn render(verdict: &Verdict, trace: &EventTrace, machine: bool) -> Vec<u8> {
    if machine {
        MachineReport::from_verdict(verdict, trace).to_bytes()
    } else {
        render_text(verdict, trace).into_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectorConfig;
    use crate::trace::trace_digest;
    use primitive_types::{H160, U256};

    fn empty_trace() -> EventTrace {
        EventTrace {
            tx_hash: "0x00000000000000000000000000000000000000000000000000000000000000aa"
                .parse()
                .unwrap(),
            status: crate::ingest::TxStatus::Success,
            gas_used_total: 21_000,
            events: vec![],
        }
    }

    fn finding(kind: AttackPatternKind) -> Finding {
        Finding {
            kind,
            evidence: vec![0],
            score: 1.0,
            explanation: "test".into(),
        }
    }

    fn llm_report(claimed: Vec<AttackPatternKind>) -> AnalysisReport {
        AnalysisReport {
            per_event: vec![],
            summary: "s".into(),
            pattern_analysis: "p".into(),
            claimed,
            further_recommendation: "r".into(),
        }
    }

    #[test]
    fn agreement_is_confirmed() {
        let verdict = cross_validate(
            vec![finding(AttackPatternKind::Reentrancy)],
            Some(llm_report(vec![AttackPatternKind::Reentrancy])),
            None,
            trace_digest(&empty_trace()),
        );
        assert_eq!(
            verdict.status(AttackPatternKind::Reentrancy),
            KindStatus::Confirmed
        );
        assert!(verdict.any_actionable());
    }

    #[test]
    fn llm_only_claim_is_not_actionable() {
        let verdict = cross_validate(
            vec![],
            Some(llm_report(vec![AttackPatternKind::IntegerOverflow])),
            None,
            trace_digest(&empty_trace()),
        );
        assert_eq!(
            verdict.status(AttackPatternKind::IntegerOverflow),
            KindStatus::LlmOnly
        );
        assert!(!verdict.any_actionable());
    }

    #[test]
    fn absent_report_limits_statuses() {
        let verdict = cross_validate(
            vec![finding(AttackPatternKind::Dos)],
            None,
            None,
            trace_digest(&empty_trace()),
        );
        assert_eq!(
            verdict.status(AttackPatternKind::Dos),
            KindStatus::DetectorOnly
        );
        for (_, status) in &verdict.statuses {
            assert!(matches!(
                status,
                KindStatus::DetectorOnly | KindStatus::Absent
            ));
        }
    }

    #[test]
    fn machine_report_round_trips() {
        let trace = empty_trace();
        let verdict = cross_validate(vec![], None, None, trace_digest(&trace));
        let report = MachineReport::from_verdict(&verdict, &trace);
        let bytes = report.to_bytes();
        let parsed = MachineReport::parse(&bytes).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(parsed.to_bytes(), bytes);
        assert_eq!(parsed.version, REPORT_VERSION);
    }

    #[test]
    fn empty_verdict_renders_no_patterns() {
        let trace = empty_trace();
        let verdict = cross_validate(vec![], None, None, trace_digest(&trace));
        let text = render_text(&verdict, &trace);
        assert!(text.contains("No patterns detected."));
        // Renders twice to the same bytes.
        assert_eq!(
            render(&verdict, &trace, true),
            render(&verdict, &trace, true)
        );
    }

    #[test]
    fn evidence_table_renders_gas_exactly() {
        let mut trace = empty_trace();
        trace.events.push(crate::trace::DecodedEvent {
            index: 0,
            name: "lendGM".into(),
            emitter: H160::repeat_byte(1),
            from: Some(H160::repeat_byte(2)),
            to: Some(H160::repeat_byte(1)),
            value: Some(U256::from(1u8)),
            gas_used: Some(5_057_945),
            origin: crate::trace::EventOrigin::Call,
            extra: Default::default(),
        });
        let findings = crate::detect::detect_dos(&trace, &DetectorConfig::default());
        let digest = trace_digest(&trace);
        let verdict = cross_validate(findings, None, None, digest);
        let text = render_text(&verdict, &trace);
        assert!(text.contains("5057945"), "{text}");
        assert!(text.contains("4712388"), "{text}");
    }
}
