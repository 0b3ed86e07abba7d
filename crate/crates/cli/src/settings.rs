//! Argument parsing and layered configuration: built-in defaults, then the
//! TOML config file, then command-line flags.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, ValueEnum};
use serde::Deserialize;

use etrace_core::detect::DetectorConfig;
use etrace_core::llm::{RetryPolicy, DEFAULT_PROMPT_BUDGET};
use etrace_core::U256;

#[derive(Parser, Debug)]
#[command(
    name = "etrace",
    version,
    about = "Detect smart-contract attack patterns from transaction logs",
    group(ArgGroup::new("source").required(true).args(["fixture", "fixture_dir", "tx"]))
)]
pub struct Args {
    /// Analyze one fixture file
    #[arg(long, value_name = "PATH")]
    pub fixture: Option<PathBuf>,

    /// Analyze every .json fixture in a directory
    #[arg(long, value_name = "PATH")]
    pub fixture_dir: Option<PathBuf>,

    /// Fetch the receipt for this transaction hash over RPC
    #[arg(long, value_name = "HASH")]
    pub tx: Option<String>,

    /// RPC endpoint URL (or set ETRACE_RPC_URL)
    #[arg(long, value_name = "URL")]
    pub rpc: Option<String>,

    /// Additional event ABI file (repeatable)
    #[arg(long, value_name = "PATH")]
    pub abi: Vec<PathBuf>,

    /// Skip the LLM stage (the default unless the config file enables it)
    #[arg(long, conflicts_with = "llm")]
    pub no_llm: bool,

    /// Run the LLM stage with this backend
    #[arg(long, value_enum, value_name = "BACKEND")]
    pub llm: Option<LlmMode>,

    /// Directory of canned responses for the mock backend
    #[arg(long, value_name = "PATH")]
    pub mock_dir: Option<PathBuf>,

    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Print the normalized event trace (one event per line)
    #[arg(long)]
    pub dump_trace: bool,

    /// Print the assembled LLM prompt and its digest, then exit
    #[arg(long)]
    pub dump_prompt: bool,

    /// TOML config file with [detector] and [llm] sections
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Transfer value at or above which overflow is suspected
    /// (decimal, 0x-hex, or base^exp like 2^250)
    #[arg(long, value_name = "N")]
    pub overflow_threshold: Option<String>,

    /// Minimum transfers between one address pair for reentrancy
    #[arg(long, value_name = "N")]
    pub reentry_min_transfers: Option<usize>,

    /// Minimum direction reversals within those transfers
    #[arg(long, value_name = "N")]
    pub reentry_min_reversals: Option<usize>,

    /// Gas ceiling for the DoS gas rule
    #[arg(long, value_name = "GAS")]
    pub dos_gas_limit: Option<u64>,

    /// Minimum repeated calls for the DoS repetition rule
    #[arg(long, value_name = "N")]
    pub dos_min_repeats: Option<usize>,

    /// Value ceiling (wei) for the DoS repetition rule
    #[arg(long, value_name = "WEI")]
    pub dos_small_value_max: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LlmMode {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Clone)]
pub enum LlmStage {
    Off,
    Mock(PathBuf),
    Http {
        endpoint: String,
        model: String,
        temperature: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub detector: DetectorConfig,
    pub llm_stage: LlmStage,
    pub retry: RetryPolicy,
    pub prompt_budget: usize,
    pub max_in_flight: usize,
    pub format: Format,
    pub dump_trace: bool,
    pub dump_prompt: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    detector: DetectorSection,
    llm: LlmSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DetectorSection {
    overflow_threshold: Option<String>,
    reentry_min_transfers: Option<usize>,
    reentry_min_reversals: Option<usize>,
    dos_gas_limit: Option<u64>,
    dos_min_repeats: Option<usize>,
    dos_small_value_max: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LlmSection {
    mode: Option<String>,
    endpoint: Option<String>,
    model: Option<String>,
    temperature: Option<f64>,
    max_attempts: Option<u32>,
    backoff_ms: Option<u64>,
    prompt_budget: Option<usize>,
    max_in_flight: Option<usize>,
    mock_dir: Option<PathBuf>,
}

/// Accepts decimal, 0x-prefixed hex, or `base^exp` shorthand (`2^250`,
/// `10^21`).
pub fn parse_u256(s: &str) -> Result<U256> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let base: u64 = base.trim().parse().context("exponent base")?;
        let exp: u32 = exp.trim().parse().context("exponent")?;
        return U256::from(base)
            .checked_pow(U256::from(exp))
            .with_context(|| format!("{s} exceeds 256 bits"));
    }
    if let Some(hex) = s.strip_prefix("0x") {
        return U256::from_str_radix(hex, 16).with_context(|| format!("invalid hex value {s}"));
    }
    U256::from_dec_str(s).with_context(|| format!("invalid decimal value {s}"))
}

impl Settings {
    pub fn assemble(args: &Args) -> Result<Self> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config file {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("invalid config file {}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let mut detector = DetectorConfig::default();
        let file_det = &file.detector;
        if let Some(v) = file_det.overflow_threshold.as_deref().map(parse_u256) {
            detector.overflow_threshold = v.context("[detector].overflow_threshold")?;
        }
        if let Some(v) = file_det.reentry_min_transfers {
            detector.reentry_min_transfers = v;
        }
        if let Some(v) = file_det.reentry_min_reversals {
            detector.reentry_min_reversals = v;
        }
        if let Some(v) = file_det.dos_gas_limit {
            detector.dos_gas_limit = v;
        }
        if let Some(v) = file_det.dos_min_repeats {
            detector.dos_min_repeats = v;
        }
        if let Some(v) = file_det.dos_small_value_max.as_deref().map(parse_u256) {
            detector.dos_small_value_max = v.context("[detector].dos_small_value_max")?;
        }

        if let Some(v) = args.overflow_threshold.as_deref().map(parse_u256) {
            detector.overflow_threshold = v.context("--overflow-threshold")?;
        }
        if let Some(v) = args.reentry_min_transfers {
            detector.reentry_min_transfers = v;
        }
        if let Some(v) = args.reentry_min_reversals {
            detector.reentry_min_reversals = v;
        }
        if let Some(v) = args.dos_gas_limit {
            detector.dos_gas_limit = v;
        }
        if let Some(v) = args.dos_min_repeats {
            detector.dos_min_repeats = v;
        }
        if let Some(v) = args.dos_small_value_max.as_deref().map(parse_u256) {
            detector.dos_small_value_max = v.context("--dos-small-value-max")?;
        }
        detector.validate().map_err(|e| anyhow::anyhow!(e))?;

        let mode = if args.no_llm {
            None
        } else if let Some(mode) = args.llm {
            Some(match mode {
                LlmMode::Mock => "mock".to_string(),
                LlmMode::Http => "http".to_string(),
            })
        } else {
            file.llm.mode.clone().filter(|m| m != "off")
        };

        let llm_stage = match mode.as_deref() {
            None => LlmStage::Off,
            Some("mock") => {
                let dir = args
                    .mock_dir
                    .clone()
                    .or_else(|| file.llm.mock_dir.clone())
                    .context("--llm mock needs --mock-dir (or [llm].mock_dir in the config)")?;
                LlmStage::Mock(dir)
            }
            Some("http") => LlmStage::Http {
                endpoint: file.llm.endpoint.clone().unwrap_or_default(),
                model: file.llm.model.clone().unwrap_or_default(),
                temperature: file.llm.temperature.unwrap_or(0.0),
            },
            Some(other) => bail!("unknown [llm].mode `{other}` (off, mock, or http)"),
        };

        if args.mock_dir.is_some() && !matches!(llm_stage, LlmStage::Mock(_)) {
            bail!("--mock-dir only applies with --llm mock");
        }

        let retry = RetryPolicy {
            max_attempts: file.llm.max_attempts.unwrap_or(3),
            initial_backoff: Duration::from_millis(file.llm.backoff_ms.unwrap_or(250)),
        };

        Ok(Settings {
            detector,
            llm_stage,
            retry,
            prompt_budget: file.llm.prompt_budget.unwrap_or(DEFAULT_PROMPT_BUDGET),
            max_in_flight: file.llm.max_in_flight.unwrap_or(2),
            format: args.format,
            dump_trace: args.dump_trace,
            dump_prompt: args.dump_prompt,
        })
    }
}
