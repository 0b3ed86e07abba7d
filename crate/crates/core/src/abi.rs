//! Event ABI registry and raw-log decoding.
//!
//! Logs identify their event through topic 0, the keccak-256 hash of the
//! canonical signature (`Transfer(address,address,uint256)`). Decoding maps
//! topics and data words back to named, typed parameters. Unrecognized
//! topic-0 values are not an error: contracts without a published ABI are
//! the normal case, and such logs degrade to [`DecodedLog::Unknown`].

use std::collections::BTreeMap;
use std::fmt;

use primitive_types::{H160, H256, U256};
use serde::Deserialize;
use sha3::{Digest, Keccak256};
use thiserror::Error;

use crate::ingest::LogEntry;

#[derive(Debug, Error)]
pub enum AbiError {
    #[error("event `{name}` declares {count} indexed parameters, at most 3 supported")]
    TooManyIndexed { name: String, count: usize },
    #[error(
        "signature hash {hash} already registered for `{existing}`, cannot register `{incoming}`"
    )]
    HashConflict {
        hash: String,
        existing: String,
        incoming: String,
    },
    #[error("no event named `{0}` in the registry")]
    UnknownName(String),
    #[error(
        "log does not match `{signature}`: expected {expected_topics} topics and \
         {expected_data} data bytes, log has {got_topics} topics and {got_data} data bytes"
    )]
    ArityMismatch {
        signature: String,
        expected_topics: usize,
        expected_data: usize,
        got_topics: usize,
        got_data: usize,
    },
    #[error("event `{event}` takes {expected} parameters, {got} given")]
    ParamCount {
        event: String,
        expected: usize,
        got: usize,
    },
    #[error("parameter `{param}` of `{event}`: expected {expected}, got {got}")]
    TypeMismatch {
        event: String,
        param: String,
        expected: SolType,
        got: SolType,
    },
    #[error("unsupported parameter type `{0}` (supported: address, uint256, bool, bytes32)")]
    UnsupportedType(String),
    #[error("invalid ABI extension file: {0}")]
    Extension(String),
}

pub fn keccak256(bytes: &[u8]) -> [u8; 32] {
    let mut hasher = Keccak256::new();
    hasher.update(bytes);
    hasher.finalize().into()
}

/// Hash of a canonical event signature; the value logs carry in topic 0.
pub fn signature_hash(canonical_signature: &str) -> H256 {
    H256::from(keccak256(canonical_signature.as_bytes()))
}

/// The static parameter types exercised by the built-in registry. Dynamic
/// types (strings, arrays) and anonymous events are out of scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolType {
    Address,
    Uint256,
    Bool,
    Bytes32,
}

impl SolType {
    pub fn as_str(self) -> &'static str {
        match self {
            SolType::Address => "address",
            SolType::Uint256 => "uint256",
            SolType::Bool => "bool",
            SolType::Bytes32 => "bytes32",
        }
    }

    pub fn parse(s: &str) -> Result<Self, AbiError> {
        match s {
            "address" => Ok(SolType::Address),
            "uint256" => Ok(SolType::Uint256),
            "bool" => Ok(SolType::Bool),
            "bytes32" => Ok(SolType::Bytes32),
            other => Err(AbiError::UnsupportedType(other.to_string())),
        }
    }
}

impl fmt::Display for SolType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolValue {
    Address(H160),
    Uint(U256),
    Bool(bool),
    Word(H256),
}

impl SolValue {
    pub fn sol_type(&self) -> SolType {
        match self {
            SolValue::Address(_) => SolType::Address,
            SolValue::Uint(_) => SolType::Uint256,
            SolValue::Bool(_) => SolType::Bool,
            SolValue::Word(_) => SolType::Bytes32,
        }
    }

    /// ABI word encoding: addresses right-aligned, integers big-endian.
    pub fn to_word(&self) -> H256 {
        match self {
            SolValue::Address(a) => {
                let mut word = [0u8; 32];
                word[12..].copy_from_slice(a.as_bytes());
                H256::from(word)
            }
            SolValue::Uint(v) => H256::from(v.to_big_endian()),
            SolValue::Bool(b) => {
                let mut word = [0u8; 32];
                word[31] = *b as u8;
                H256::from(word)
            }
            SolValue::Word(w) => *w,
        }
    }

    pub fn from_word(ty: SolType, word: H256) -> SolValue {
        match ty {
            SolType::Address => SolValue::Address(H160::from_slice(&word.as_bytes()[12..])),
            SolType::Uint256 => SolValue::Uint(U256::from_big_endian(word.as_bytes())),
            SolType::Bool => SolValue::Bool(!word.is_zero()),
            SolType::Bytes32 => SolValue::Word(word),
        }
    }
}

impl fmt::Display for SolValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolValue::Address(a) => write!(f, "{}", crate::codec::to_hex(a)),
            SolValue::Uint(v) => write!(f, "{v}"),
            SolValue::Bool(b) => write!(f, "{b}"),
            SolValue::Word(w) => write!(f, "{}", crate::codec::to_hex(w)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventParam {
    pub name: String,
    pub ty: SolType,
    pub indexed: bool,
}

impl EventParam {
    pub fn new(name: &str, ty: SolType, indexed: bool) -> Self {
        EventParam {
            name: name.to_string(),
            ty,
            indexed,
        }
    }
}

/// An event's declared shape plus its precomputed topic-0 hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventAbi {
    pub name: String,
    pub params: Vec<EventParam>,
    pub canonical_signature: String,
    pub signature_hash: H256,
}

impl EventAbi {
    pub fn new(name: &str, params: Vec<EventParam>) -> Result<Self, AbiError> {
        let indexed = params.iter().filter(|p| p.indexed).count();
        if indexed > 3 {
            return Err(AbiError::TooManyIndexed {
                name: name.to_string(),
                count: indexed,
            });
        }
        let types: Vec<&str> = params.iter().map(|p| p.ty.as_str()).collect();
        let canonical_signature = format!("{name}({})", types.join(","));
        let signature_hash = signature_hash(&canonical_signature);
        Ok(EventAbi {
            name: name.to_string(),
            params,
            canonical_signature,
            signature_hash,
        })
    }

    pub fn indexed_count(&self) -> usize {
        self.params.iter().filter(|p| p.indexed).count()
    }

    pub fn data_word_count(&self) -> usize {
        self.params.iter().filter(|p| !p.indexed).count()
    }
}

/// Decoded parameter list, in the event's declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodedParams {
    pub values: Vec<(String, SolValue)>,
}

impl DecodedParams {
    pub fn get(&self, name: &str) -> Option<&SolValue> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodedLog {
    Event {
        name: String,
        params: DecodedParams,
    },
    /// Topic 0 absent or not in the registry; carries the raw entry.
    Unknown(LogEntry),
}

/// Immutable once built; decode and encode are pure lookups against it.
#[derive(Debug, Clone, Default)]
pub struct AbiRegistry {
    by_hash: BTreeMap<H256, EventAbi>,
    by_name: BTreeMap<String, H256>,
}

impl AbiRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry covering the event signatures the detectors understand:
    /// Transfer, Approval, Deposit, Withdrawal, FlashLoan, Swap, Sync.
    pub fn builtin() -> Self {
        use SolType::*;
        let mut reg = Self::new();
        let events = [
            EventAbi::new(
                "Transfer",
                vec![
                    EventParam::new("from", Address, true),
                    EventParam::new("to", Address, true),
                    EventParam::new("value", Uint256, false),
                ],
            ),
            EventAbi::new(
                "Approval",
                vec![
                    EventParam::new("owner", Address, true),
                    EventParam::new("spender", Address, true),
                    EventParam::new("value", Uint256, false),
                ],
            ),
            EventAbi::new(
                "Deposit",
                vec![
                    EventParam::new("dst", Address, true),
                    EventParam::new("wad", Uint256, false),
                ],
            ),
            EventAbi::new(
                "Withdrawal",
                vec![
                    EventParam::new("src", Address, true),
                    EventParam::new("wad", Uint256, false),
                ],
            ),
            EventAbi::new(
                "FlashLoan",
                vec![
                    EventParam::new("from", Address, true),
                    EventParam::new("to", Address, true),
                    EventParam::new("amount", Uint256, false),
                ],
            ),
            EventAbi::new(
                "Swap",
                vec![
                    EventParam::new("sender", Address, true),
                    EventParam::new("amount0In", Uint256, false),
                    EventParam::new("amount1In", Uint256, false),
                    EventParam::new("amount0Out", Uint256, false),
                    EventParam::new("amount1Out", Uint256, false),
                    EventParam::new("to", Address, true),
                ],
            ),
            EventAbi::new(
                "Sync",
                vec![
                    EventParam::new("in", Uint256, false),
                    EventParam::new("out", Uint256, false),
                ],
            ),
        ];
        for abi in events {
            reg.register(abi.expect("built-in ABI is well-formed"))
                .expect("built-in ABIs cannot collide");
        }
        reg
    }

    /// Re-registering an identical ABI is a no-op; a different ABI under the
    /// same hash is rejected.
    pub fn register(&mut self, abi: EventAbi) -> Result<(), AbiError> {
        if let Some(existing) = self.by_hash.get(&abi.signature_hash) {
            if *existing == abi {
                return Ok(());
            }
            return Err(AbiError::HashConflict {
                hash: crate::codec::to_hex(abi.signature_hash),
                existing: existing.canonical_signature.clone(),
                incoming: abi.canonical_signature.clone(),
            });
        }
        self.by_name
            .entry(abi.name.clone())
            .or_insert(abi.signature_hash);
        self.by_hash.insert(abi.signature_hash, abi);
        Ok(())
    }

    pub fn get(&self, hash: &H256) -> Option<&EventAbi> {
        self.by_hash.get(hash)
    }

    /// First registration wins when two events share a bare name.
    pub fn get_by_name(&self, name: &str) -> Option<&EventAbi> {
        self.by_name.get(name).and_then(|h| self.by_hash.get(h))
    }

    pub fn len(&self) -> usize {
        self.by_hash.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_hash.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventAbi> {
        self.by_hash.values()
    }

    /// Loads an extension file: a JSON array of
    /// `{"name": ..., "params": [{"name", "type", "indexed"}]}` entries.
    /// Returns the number of events registered.
    pub fn load_extension(&mut self, json: &str) -> Result<usize, AbiError> {
        #[derive(Deserialize)]
        struct RawParam {
            name: String,
            #[serde(rename = "type")]
            ty: String,
            #[serde(default)]
            indexed: bool,
        }
        #[derive(Deserialize)]
        struct RawEvent {
            name: String,
            params: Vec<RawParam>,
        }

        let raw: Vec<RawEvent> =
            serde_json::from_str(json).map_err(|e| AbiError::Extension(e.to_string()))?;
        let mut count = 0;
        for entry in raw {
            let params = entry
                .params
                .iter()
                .map(|p| Ok(EventParam::new(&p.name, SolType::parse(&p.ty)?, p.indexed)))
                .collect::<Result<Vec<_>, AbiError>>()?;
            self.register(EventAbi::new(&entry.name, params)?)?;
            count += 1;
        }
        Ok(count)
    }
}

/// Maps a raw log to a named event. Total over unknown signatures: a log
/// whose topic 0 is absent or unmatched comes back as [`DecodedLog::Unknown`],
/// never an error. Errors only when a matched ABI's layout does not fit.
pub fn decode_log(entry: &LogEntry, registry: &AbiRegistry) -> Result<DecodedLog, AbiError> {
    let Some(topic0) = entry.topics.first() else {
        return Ok(DecodedLog::Unknown(entry.clone()));
    };
    let Some(abi) = registry.get(topic0) else {
        return Ok(DecodedLog::Unknown(entry.clone()));
    };

    let expected_topics = abi.indexed_count() + 1;
    let expected_data = abi.data_word_count() * 32;
    if entry.topics.len() < expected_topics || entry.data.len() < expected_data {
        return Err(AbiError::ArityMismatch {
            signature: abi.canonical_signature.clone(),
            expected_topics,
            expected_data,
            got_topics: entry.topics.len(),
            got_data: entry.data.len(),
        });
    }

    let mut topic_cursor = 1;
    let mut data_cursor = 0;
    let mut values = Vec::with_capacity(abi.params.len());
    for param in &abi.params {
        let word = if param.indexed {
            let w = entry.topics[topic_cursor];
            topic_cursor += 1;
            w
        } else {
            let w = H256::from_slice(&entry.data[data_cursor..data_cursor + 32]);
            data_cursor += 32;
            w
        };
        values.push((param.name.clone(), SolValue::from_word(param.ty, word)));
    }

    Ok(DecodedLog::Event {
        name: abi.name.clone(),
        params: DecodedParams { values },
    })
}

/// Inverse of [`decode_log`] for registry events; the emitter address and
/// log index of the returned entry are zeroed.
pub fn encode_log(
    name: &str,
    params: &DecodedParams,
    registry: &AbiRegistry,
) -> Result<LogEntry, AbiError> {
    let abi = registry
        .get_by_name(name)
        .ok_or_else(|| AbiError::UnknownName(name.to_string()))?;
    if params.values.len() != abi.params.len() {
        return Err(AbiError::ParamCount {
            event: name.to_string(),
            expected: abi.params.len(),
            got: params.values.len(),
        });
    }

    let mut topics = vec![abi.signature_hash];
    let mut data = Vec::with_capacity(abi.data_word_count() * 32);
    for (param, (_, value)) in abi.params.iter().zip(&params.values) {
        if value.sol_type() != param.ty {
            return Err(AbiError::TypeMismatch {
                event: name.to_string(),
                param: param.name.clone(),
                expected: param.ty,
                got: value.sol_type(),
            });
        }
        let word = value.to_word();
        if param.indexed {
            topics.push(word);
        } else {
            data.extend_from_slice(word.as_bytes());
        }
    }

    Ok(LogEntry {
        address: H160::zero(),
        topics,
        data,
        log_index: 0,
    })
}
