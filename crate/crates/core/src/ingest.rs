//! Receipt ingestion: fixture files on disk and receipt fetch over RPC.
//!
//! A fixture holds one transaction per file, mirroring the receipt wire
//! shape (`txHash`, `blockNumber`, `status`, `gasUsed`, `logs[]`) plus an
//! optional `callRecords` section for call-level rows that receipts do not
//! carry. Hashes and addresses are 0x-prefixed lowercase hex; 256-bit
//! values are decimal strings.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use primitive_types::{H160, H256, U256};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid fixture field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("transport error contacting {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("transaction {tx} not found at {endpoint}")]
    NotFound { tx: TxHash, endpoint: String },
    #[error("malformed RPC response: {0}")]
    Rpc(String),
}

impl IngestError {
    /// Transport failures are worth retrying; everything else is not.
    pub fn is_retriable(&self) -> bool {
        matches!(self, IngestError::Transport { .. })
    }
}

/// 32-byte transaction hash; textual form is exactly 66 characters of
/// 0x-prefixed lowercase hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxHash(pub H256);

impl TxHash {
    pub fn as_h256(&self) -> H256 {
        self.0
    }
}

impl FromStr for TxHash {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        codec::parse_h256(s)
            .map(TxHash)
            .map_err(|e| IngestError::Validation(format!("invalid transaction hash: {e}")))
    }
}

impl fmt::Display for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&codec::to_hex(self.0))
    }
}

impl Serialize for TxHash {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TxHash {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxStatus {
    Success,
    Failure,
}

impl TxStatus {
    pub fn is_success(self) -> bool {
        matches!(self, TxStatus::Success)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TxStatus::Success => "success",
            TxStatus::Failure => "failure",
        }
    }
}

/// One raw log record: emitting contract, up to four 32-byte topics, and a
/// data blob whose length is a multiple of 32.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    #[serde(with = "codec::h160")]
    pub address: H160,
    #[serde(with = "codec::topics")]
    pub topics: Vec<H256>,
    #[serde(with = "codec::log_data")]
    pub data: Vec<u8>,
    pub log_index: u32,
}

/// A call-level row (function name, caller, callee, value, gas). Receipts
/// do not carry these; fixtures may, so call-heavy incidents can be
/// reproduced without inventing log semantics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CallRecord {
    pub function_name: String,
    #[serde(with = "codec::h160")]
    pub from: H160,
    #[serde(with = "codec::h160")]
    pub to: H160,
    #[serde(with = "codec::dec_u256")]
    pub value: U256,
    pub gas_used: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransactionReceipt {
    pub tx_hash: TxHash,
    pub block_number: u64,
    pub status: TxStatus,
    pub gas_used: u64,
    pub logs: Vec<LogEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub call_records: Vec<CallRecord>,
}

impl TransactionReceipt {
    /// Restores the ordering invariant: logs ascending by `log_index`.
    fn normalize(mut self) -> Self {
        self.logs.sort_by_key(|l| l.log_index);
        self
    }
}

/// Parses fixture bytes. Unknown fields are ignored; malformed fields are
/// reported with their path in the document.
pub fn parse_fixture(bytes: &[u8]) -> Result<TransactionReceipt, IngestError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let receipt: TransactionReceipt =
        serde_path_to_error::deserialize(&mut de).map_err(|e| IngestError::Parse {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    Ok(receipt.normalize())
}

pub fn load_fixture(path: impl AsRef<Path>) -> Result<TransactionReceipt, IngestError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_fixture(&bytes)
}

/// Canonical fixture serialization; `parse_fixture` of the output equals
/// the input field for field, and re-serializing is byte-identical.
pub fn receipt_to_fixture(receipt: &TransactionReceipt) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(receipt).expect("receipt serialization is infallible");
    out.push(b'\n');
    out
}
