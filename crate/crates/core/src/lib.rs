//! Transaction-log forensics for smart contracts.
//!
//! Source code for the contracts involved in an attack is usually not
//! available, but the transaction receipt is. This crate turns a receipt's
//! raw logs into a typed event trace, matches the trace against four
//! deterministic attack patterns (reentrancy, integer overflow, flash-loan
//! attack, DoS), and can cross-validate the detector verdict with an
//! LLM-based semantic analysis stage.
//!
//! Pipeline: [`ingest`] (fixture files or RPC fetch) → [`abi`] (topic
//! decoding) → [`trace`] (normalized events) → [`detect`] (pattern
//! findings) → optional [`llm`] stage → [`report`] (cross-validated
//! verdict, text and machine rendering).

pub mod abi;
pub mod codec;
pub mod detect;
pub mod ingest;
pub mod llm;
pub mod report;
pub mod rpc;
pub mod trace;

pub use primitive_types::{H160, H256, U256};

pub use abi::{decode_log, encode_log, signature_hash, AbiRegistry, DecodedLog, EventAbi};
pub use detect::{run_all_detectors, AttackPatternKind, DetectorConfig, Finding};
pub use ingest::{
    load_fixture, parse_fixture, receipt_to_fixture, LogEntry, TransactionReceipt, TxHash, TxStatus,
};
pub use llm::{analyze, build_prompt, default_conditions, parse_report, AnalysisReport};
pub use report::{cross_validate, KindStatus, MachineReport, Verdict};
pub use rpc::fetch_receipt;
pub use trace::{build_trace, trace_digest, EventTrace, TraceDigest};

/// Environment variable naming the default RPC endpoint.
pub const RPC_URL_ENV: &str = "ETRACE_RPC_URL";
