//! Normalizes decoded logs and call records into a flat per-transaction
//! event trace: one `(name, from, to, value, gas)` record per event, in
//! transaction order. This is the representation the detectors and the
//! prompt builder consume.

use std::collections::{BTreeMap, BTreeSet};

use primitive_types::{H160, U256};
use thiserror::Error;

use crate::abi::{decode_log, AbiError, AbiRegistry, DecodedLog, SolValue};
use crate::ingest::{TransactionReceipt, TxHash, TxStatus};

/// Name given to log entries whose topic 0 matches nothing in the registry.
pub const UNKNOWN_EVENT: &str = "UnknownEvent";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("log at trace index {index}: {source}")]
    Decode {
        index: usize,
        #[source]
        source: AbiError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOrigin {
    Log,
    Call,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedEvent {
    /// 0-based position in the trace.
    pub index: usize,
    pub name: String,
    /// Emitting contract for log events; the callee for call records.
    pub emitter: H160,
    pub from: Option<H160>,
    pub to: Option<H160>,
    pub value: Option<U256>,
    pub gas_used: Option<u64>,
    pub origin: EventOrigin,
    /// Residual named parameters that have no from/to/value role
    /// (e.g. Swap amounts, Sync reserves).
    pub extra: BTreeMap<String, SolValue>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTrace {
    pub tx_hash: TxHash,
    pub status: TxStatus,
    pub gas_used_total: u64,
    pub events: Vec<DecodedEvent>,
}

/// Parameter names that carry the sender role across the built-in events.
const FROM_ROLES: [&str; 4] = ["from", "owner", "src", "sender"];
const TO_ROLES: [&str; 3] = ["to", "spender", "dst"];
const VALUE_ROLES: [&str; 3] = ["value", "amount", "wad"];

/// Decodes every log against the registry and appends call records, giving
/// one event per source row: `|events| = |logs| + |call_records|`.
pub fn build_trace(
    receipt: &TransactionReceipt,
    registry: &AbiRegistry,
) -> Result<EventTrace, TraceError> {
    let mut events = Vec::with_capacity(receipt.logs.len() + receipt.call_records.len());

    for log in &receipt.logs {
        let index = events.len();
        let decoded =
            decode_log(log, registry).map_err(|source| TraceError::Decode { index, source })?;
        let event = match decoded {
            DecodedLog::Event { name, params } => {
                let mut from = None;
                let mut to = None;
                let mut value = None;
                let mut extra = BTreeMap::new();
                for (pname, pvalue) in params.values {
                    match pvalue {
                        SolValue::Address(a)
                            if from.is_none() && FROM_ROLES.contains(&pname.as_str()) =>
                        {
                            from = Some(a)
                        }
                        SolValue::Address(a)
                            if to.is_none() && TO_ROLES.contains(&pname.as_str()) =>
                        {
                            to = Some(a)
                        }
                        SolValue::Uint(v)
                            if value.is_none() && VALUE_ROLES.contains(&pname.as_str()) =>
                        {
                            value = Some(v)
                        }
                        other => {
                            extra.insert(pname, other);
                        }
                    }
                }
                DecodedEvent {
                    index,
                    name,
                    emitter: log.address,
                    from,
                    to,
                    value,
                    gas_used: None,
                    origin: EventOrigin::Log,
                    extra,
                }
            }
            DecodedLog::Unknown(raw) => {
                let mut extra = BTreeMap::new();
                if let Some(topic0) = raw.topics.first() {
                    extra.insert("topic0".to_string(), SolValue::Word(*topic0));
                }
                DecodedEvent {
                    index,
                    name: UNKNOWN_EVENT.to_string(),
                    emitter: raw.address,
                    from: None,
                    to: None,
                    value: None,
                    gas_used: None,
                    origin: EventOrigin::Log,
                    extra,
                }
            }
        };
        events.push(event);
    }

    for call in &receipt.call_records {
        let index = events.len();
        events.push(DecodedEvent {
            index,
            name: call.function_name.clone(),
            emitter: call.to,
            from: Some(call.from),
            to: Some(call.to),
            value: Some(call.value),
            gas_used: Some(call.gas_used),
            origin: EventOrigin::Call,
            extra: BTreeMap::new(),
        });
    }

    Ok(EventTrace {
        tx_hash: receipt.tx_hash,
        status: receipt.status,
        gas_used_total: receipt.gas_used,
        events,
    })
}

/// Summary counts used by the report header and the prompt builder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDigest {
    pub event_count: usize,
    pub events_by_name: BTreeMap<String, usize>,
    /// Distinct addresses appearing as from, to, or emitter.
    pub distinct_addresses: usize,
    pub max_value: Option<U256>,
    pub max_gas_used: Option<u64>,
    pub gas_used_total: u64,
}

pub fn trace_digest(trace: &EventTrace) -> TraceDigest {
    let mut events_by_name = BTreeMap::new();
    let mut addresses = BTreeSet::new();
    let mut max_value: Option<U256> = None;
    let mut max_gas_used: Option<u64> = None;

    for event in &trace.events {
        *events_by_name.entry(event.name.clone()).or_insert(0) += 1;
        addresses.insert(event.emitter);
        addresses.extend(event.from);
        addresses.extend(event.to);
        if let Some(v) = event.value {
            max_value = Some(max_value.map_or(v, |m| m.max(v)));
        }
        if let Some(g) = event.gas_used {
            max_gas_used = Some(max_gas_used.map_or(g, |m| m.max(g)));
        }
    }

    TraceDigest {
        event_count: trace.events.len(),
        events_by_name,
        distinct_addresses: if trace.events.is_empty() {
            0
        } else {
            addresses.len()
        },
        max_value,
        max_gas_used,
        gas_used_total: trace.gas_used_total,
    }
}

/// Renders a 256-bit value with 5 significant digits, e.g. `1.0030e22`.
pub fn format_sci(v: U256) -> String {
    if v.is_zero() {
        return "0.0000e0".to_string();
    }
    let digits = v.to_string().into_bytes();
    let mut exp = digits.len() - 1;
    let mut mantissa: u32 = 0;
    for i in 0..5 {
        let d = digits.get(i).map_or(0, |b| (b - b'0') as u32);
        mantissa = mantissa * 10 + d;
    }
    if digits.get(5).is_some_and(|b| *b >= b'5') {
        mantissa += 1;
        if mantissa == 100_000 {
            mantissa = 10_000;
            exp += 1;
        }
    }
    let m = mantissa.to_string();
    format!("{}.{}e{exp}", &m[..1], &m[1..])
}

/// Abbreviates an address to its leading 4 hex digits for display.
pub fn short_addr(a: H160) -> String {
    format!("0x{}", &hex::encode(a.as_bytes())[..4])
}

/// The address column: `from→to` when both sides are known, one side when
/// only one is, the emitter otherwise.
pub fn address_column(event: &DecodedEvent) -> String {
    match (event.from, event.to) {
        (Some(f), Some(t)) => format!("{}→{}", short_addr(f), short_addr(t)),
        (Some(f), None) => short_addr(f),
        (None, Some(t)) => format!("→{}", short_addr(t)),
        (None, None) => short_addr(event.emitter),
    }
}

/// One-line rendering used by `--dump-trace` and the prompt builder:
/// `index name address value gas`.
pub fn event_line(event: &DecodedEvent) -> String {
    let value = event.value.map_or_else(|| "-".to_string(), format_sci);
    let gas = event
        .gas_used
        .map_or_else(|| "-".to_string(), |g| g.to_string());
    let mut line = format!(
        "{} {} {} {} {}",
        event.index,
        event.name,
        address_column(event),
        value,
        gas
    );
    if !event.extra.is_empty() {
        let extras: Vec<String> = event
            .extra
            .iter()
            .map(|(k, v)| match v {
                SolValue::Uint(u) => format!("{k}={}", format_sci(*u)),
                other => format!("{k}={other}"),
            })
            .collect();
        line.push_str(&format!(" [{}]", extras.join(", ")));
    }
    line
}
