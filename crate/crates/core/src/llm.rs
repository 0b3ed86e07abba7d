//! The semantic-analysis stage: builds a chain-of-thought prompt that pairs
//! the four vulnerability conditions with the serialized event trace, sends
//! it to a pluggable text-generation backend, and parses the structured
//! `Summary / Pattern Analysis / Further Recommendation` response.

pub mod backends;

use std::time::Duration;

use thiserror::Error;

use crate::abi::keccak256;
use crate::detect::AttackPatternKind;
use crate::trace::{event_line, EventTrace};

pub use backends::{HttpBackend, LlmBackend, MockBackend};

/// Default character budget for an assembled prompt. Changing the budget
/// can change truncation, and with it the prompt digest mock fixtures are
/// keyed by.
pub const DEFAULT_PROMPT_BUDGET: usize = 12_000;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt budget {budget} is below the minimum {minimum} for this trace")]
    BudgetTooSmall { budget: usize, minimum: usize },
    #[error("backend `{backend}` failed after {attempts} attempt(s): {message}")]
    Backend {
        backend: String,
        attempts: u32,
        message: String,
    },
    #[error("backend `{backend}` returned an empty response")]
    EmptyResponse { backend: String },
    #[error("response has none of the three section headers")]
    Unparseable { raw: String },
    #[error("mock fixture directory {dir} is not readable: {message}")]
    MockDir { dir: String, message: String },
    #[error("{0}")]
    Config(String),
}

/// One attack kind paired with the natural-language condition the model is
/// asked to check the trace against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VulnerabilityCondition {
    pub kind: AttackPatternKind,
    pub condition_text: String,
}

/// The four conditions, one per attack kind.
pub fn default_conditions() -> Vec<VulnerabilityCondition> {
    let texts = [
        (
            AttackPatternKind::Reentrancy,
            "multiple calls to the same function during the contract execution, exploiting \
             external calls before state updates, leading to malicious repeated fund transfers \
             or tampering with the contract's state",
        ),
        (
            AttackPatternKind::IntegerOverflow,
            "an arithmetic result wraps past the unsigned 256-bit range, surfacing as a \
             transferred value of abnormal magnitude (on the order of 2^255) that no prior \
             balance supports",
        ),
        (
            AttackPatternKind::FlashLoanAttack,
            "an uncollateralized loan is borrowed and repaid within a single transaction, \
             funding swap activity that distorts prices before the profit is withdrawn",
        ),
        (
            AttackPatternKind::Dos,
            "repeated low-value calls inflate contract state until a required operation needs \
             more gas than the transaction limit allows, leaving funds or functionality \
             permanently stuck",
        ),
    ];
    texts
        .into_iter()
        .map(|(kind, text)| VulnerabilityCondition {
            kind,
            condition_text: text.to_string(),
        })
        .collect()
}

const SYSTEM_INSTRUCTIONS: &str = "You are a smart-contract security analyst. You are given the \
ordered event trace of one blockchain transaction. No contract source code is available; base \
every conclusion on the event trace alone. Work in two stages: first explain each event, then \
judge the transaction as a whole.";

const REASONING_DIRECTIVE: &str = "Explain each event on its own line as `Event <n>: \
<explanation>`, reasoning step by step through the trace. Then give your overall assessment in \
exactly three sections titled `Summary`, `Pattern Analysis`, and `Further Recommendation`. In \
Pattern Analysis, state which of the vulnerability conditions (one, several, or none) the \
events match and why.";

/// A fully assembled prompt: instructions, the four conditions, the
/// serialized events (possibly elided in the middle), and the reasoning
/// directive, in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub system_instructions: String,
    pub conditions: Vec<VulnerabilityCondition>,
    /// One line per surviving event, plus one marker line when truncated.
    pub event_lines: Vec<String>,
    pub reasoning_directive: String,
    /// How many event lines the budget forced out (0 = none).
    pub elided_events: usize,
}

impl PromptBundle {
    pub fn assemble(&self) -> String {
        let conditions: Vec<String> = self
            .conditions
            .iter()
            .map(|c| format!("- {}: {}", c.kind.label(), c.condition_text))
            .collect();
        format!(
            "{}\n\nVulnerability conditions:\n{}\n\nEvents (index name addresses value gas):\n{}\n\n{}\n",
            self.system_instructions,
            conditions.join("\n"),
            self.event_lines.join("\n"),
            self.reasoning_directive,
        )
    }

    /// Keccak-256 of the assembled prompt, as lowercase hex. Mock fixture
    /// files are named `<digest>.txt`.
    pub fn digest(&self) -> String {
        hex::encode(keccak256(self.assemble().as_bytes()))
    }
}

fn elision_marker(count: usize) -> String {
    format!("... ({count} events elided) ...")
}

/// Prompt budgets are measured in characters.
fn prompt_len(s: &str) -> usize {
    s.chars().count()
}

/// Builds the prompt for a trace. When the assembled prompt would exceed
/// `budget` characters, the event list keeps the first ceil(k/2) and last
/// floor(k/2) lines for the largest k that fits and inserts one elision
/// marker between them.
pub fn build_prompt(
    trace: &EventTrace,
    conditions: &[VulnerabilityCondition],
    budget: usize,
) -> Result<PromptBundle, LlmError> {
    let lines: Vec<String> = trace.events.iter().map(event_line).collect();
    let n = lines.len();

    let bundle_with = |event_lines: Vec<String>, elided: usize| PromptBundle {
        system_instructions: SYSTEM_INSTRUCTIONS.to_string(),
        conditions: conditions.to_vec(),
        event_lines,
        reasoning_directive: REASONING_DIRECTIVE.to_string(),
        elided_events: elided,
    };

    let truncated_to = |k: usize| {
        let head = k.div_ceil(2);
        let tail = k - head;
        let mut kept: Vec<String> = lines[..head].to_vec();
        kept.push(elision_marker(n - k));
        kept.extend_from_slice(&lines[n - tail..]);
        bundle_with(kept, n - k)
    };

    let full = bundle_with(lines.clone(), 0);
    if prompt_len(&full.assemble()) <= budget {
        return Ok(full);
    }

    // Largest k < n whose head+marker+tail assembly fits.
    for k in (1..n).rev() {
        let candidate = truncated_to(k);
        if prompt_len(&candidate.assemble()) <= budget {
            return Ok(candidate);
        }
    }

    let minimum = if n <= 1 {
        prompt_len(&full.assemble())
    } else {
        prompt_len(&truncated_to(1).assemble())
    };
    Err(LlmError::BudgetTooSmall { budget, minimum })
}

/// Retry policy for transient backend failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(250),
        }
    }
}

/// Sends the assembled prompt to the backend and returns its output
/// verbatim. Transient failures are retried with exponential backoff up to
/// the policy's attempt count; an empty response is an error.
pub fn analyze(
    bundle: &PromptBundle,
    backend: &dyn LlmBackend,
    policy: &RetryPolicy,
) -> Result<String, LlmError> {
    let prompt = bundle.assemble();
    let attempts = policy.max_attempts.max(1);
    let mut backoff = policy.initial_backoff;

    for attempt in 1..=attempts {
        match backend.generate(&prompt) {
            Ok(raw) if raw.trim().is_empty() => {
                return Err(LlmError::EmptyResponse {
                    backend: backend.name().to_string(),
                })
            }
            Ok(raw) => return Ok(raw),
            Err(err) if err.is_transient() && attempt < attempts => {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            Err(err) => {
                return Err(LlmError::Backend {
                    backend: backend.name().to_string(),
                    attempts: attempt,
                    message: err.to_string(),
                })
            }
        }
    }
    unreachable!("loop returns on the final attempt")
}

/// The parsed three-section analysis plus per-event explanations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    /// `(trace index, explanation)` pairs, in response order.
    pub per_event: Vec<(usize, String)>,
    pub summary: String,
    pub pattern_analysis: String,
    /// Attack kinds the Pattern Analysis section names.
    pub claimed: Vec<AttackPatternKind>,
    pub further_recommendation: String,
}

impl AnalysisReport {
    pub fn claims(&self, kind: AttackPatternKind) -> bool {
        self.claimed.contains(&kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Summary,
    PatternAnalysis,
    FurtherRecommendation,
}

/// Strips markdown decoration and list numbering from a candidate header
/// line: `## 2) **Pattern Analysis:**` -> `pattern analysis`.
fn normalized_header(line: &str) -> Option<(Section, String)> {
    let mut stripped = line.trim();
    loop {
        let next = stripped
            .trim_start_matches(['#', '*', '-', '>', '=', ' '])
            .trim_start_matches(|c: char| c.is_ascii_digit())
            .trim_start_matches(['.', ')', ':', ' ']);
        if next == stripped {
            break;
        }
        stripped = next;
    }
    let stripped = stripped.trim_end_matches(['*', '#', '=', ' ']);
    let lower = stripped.to_lowercase();

    for (section, name) in [
        (Section::Summary, "summary"),
        (Section::PatternAnalysis, "pattern analysis"),
        (Section::FurtherRecommendation, "further recommendation"),
    ] {
        if let Some(rest) = lower.strip_prefix(name) {
            // A header is the bare name, optionally followed by `:` and
            // inline content. Anything else is prose.
            let inline = match rest.chars().next() {
                None => String::new(),
                Some(':') => stripped[name.len() + 1..]
                    .trim_start_matches(['*', '#', ' '])
                    .trim()
                    .to_string(),
                Some(_) => continue,
            };
            return Some((section, inline));
        }
    }
    None
}

/// Case-insensitive search for `term` bounded by non-alphanumeric
/// characters, so `dos` does not match inside `windows`.
fn contains_term(haystack: &str, term: &str) -> bool {
    let lower = haystack.to_lowercase();
    let bytes = lower.as_bytes();
    let mut start = 0;
    while let Some(pos) = lower[start..].find(term) {
        let begin = start + pos;
        let end = begin + term.len();
        let left_ok = begin == 0 || !bytes[begin - 1].is_ascii_alphanumeric();
        let right_ok = end == bytes.len() || !bytes[end].is_ascii_alphanumeric();
        if left_ok && right_ok {
            return true;
        }
        start = begin + 1;
    }
    false
}

fn claimed_kinds(pattern_analysis: &str) -> Vec<AttackPatternKind> {
    let synonyms: [(AttackPatternKind, &[&str]); 4] = [
        (
            AttackPatternKind::Reentrancy,
            &["reentrancy", "re-entrancy", "reentrant"],
        ),
        (
            AttackPatternKind::IntegerOverflow,
            &["integer overflow", "integer-overflow", "integeroverflow"],
        ),
        (
            AttackPatternKind::FlashLoanAttack,
            &["flash loan", "flashloan", "flash-loan", "flashloanattack"],
        ),
        (
            AttackPatternKind::Dos,
            &["denial of service", "denial-of-service", "dos"],
        ),
    ];
    synonyms
        .into_iter()
        .filter(|(_, terms)| terms.iter().any(|t| contains_term(pattern_analysis, t)))
        .map(|(kind, _)| kind)
        .collect()
}

/// Recognizes a leading `Event <n>:` (or `Event <n> -`) marker.
fn event_marker(line: &str) -> Option<(usize, String)> {
    let stripped = line.trim().trim_start_matches(['-', '*', '#']).trim_start();
    let rest = stripped
        .strip_prefix("Event ")
        .or_else(|| stripped.strip_prefix("event "))?;
    let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
    if digits.is_empty() {
        return None;
    }
    let after = rest[digits.len()..].trim_start();
    let text = after
        .strip_prefix(':')
        .or_else(|| after.strip_prefix('-'))?;
    Some((digits.parse().ok()?, text.trim().to_string()))
}

/// Splits a raw response into the three sections, tolerating markdown
/// decoration and numbering around the headers. Finding at least one of
/// the three headers is required; a response with none of them comes back
/// as [`LlmError::Unparseable`] carrying the raw text so the final report
/// can append it for inspection.
pub fn parse_report(raw: &str, trace: &EventTrace) -> Result<AnalysisReport, LlmError> {
    let mut sections: [Vec<String>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut current: Option<Section> = None;
    let mut any_header = false;
    let mut per_event: Vec<(usize, String)> = Vec::new();

    for line in raw.lines() {
        if let Some((section, inline)) = normalized_header(line) {
            any_header = true;
            current = Some(section);
            if !inline.is_empty() {
                sections[section as usize].push(inline);
            }
            continue;
        }
        if let Some((index, text)) = event_marker(line) {
            if index < trace.events.len() && !per_event.iter().any(|(i, _)| *i == index) {
                per_event.push((index, text));
                continue;
            }
        }
        if let Some(section) = current {
            sections[section as usize].push(line.trim_end().to_string());
        }
    }

    if !any_header {
        return Err(LlmError::Unparseable {
            raw: raw.to_string(),
        });
    }

    let join = |lines: &[String]| lines.join("\n").trim().to_string();
    let pattern_analysis = join(&sections[Section::PatternAnalysis as usize]);
    let claimed = claimed_kinds(&pattern_analysis);

    Ok(AnalysisReport {
        per_event,
        summary: join(&sections[Section::Summary as usize]),
        claimed,
        pattern_analysis,
        further_recommendation: join(&sections[Section::FurtherRecommendation as usize]),
    })
}
