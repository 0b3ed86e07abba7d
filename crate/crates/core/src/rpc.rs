//! Receipt fetch over the standard `eth_getTransactionReceipt` JSON-RPC
//! method. The HTTP layer is kept thin; response mapping is a pure function
//! so it can be tested against canned node responses.

use primitive_types::{H160, H256};
use serde_json::{json, Value};

use crate::codec;
use crate::ingest::{CallRecord, IngestError, LogEntry, TransactionReceipt, TxHash, TxStatus};

/// Fetches the receipt for `tx` from `endpoint`. Network failures surface
/// as retriable transport errors; an unknown transaction is not-found.
pub fn fetch_receipt(endpoint: &str, tx: &TxHash) -> Result<TransactionReceipt, IngestError> {
    let payload = json!({
        "jsonrpc": "2.0",
        "id": 1,
        "method": "eth_getTransactionReceipt",
        "params": [tx.to_string()],
    });

    let transport = |message: String| IngestError::Transport {
        endpoint: endpoint.to_string(),
        message,
    };

    let mut response = ureq::post(endpoint)
        .send_json(&payload)
        .map_err(|e| transport(e.to_string()))?;
    let body: Value = response
        .body_mut()
        .read_json()
        .map_err(|e| transport(format!("unreadable response body: {e}")))?;

    if let Some(err) = body.get("error").filter(|e| !e.is_null()) {
        return Err(IngestError::Rpc(format!("node returned error: {err}")));
    }
    let result = body.get("result").cloned().unwrap_or(Value::Null);
    if result.is_null() {
        return Err(IngestError::NotFound {
            tx: *tx,
            endpoint: endpoint.to_string(),
        });
    }
    receipt_from_rpc(&result)
}

/// Maps one `eth_getTransactionReceipt` result object to a receipt.
pub fn receipt_from_rpc(result: &Value) -> Result<TransactionReceipt, IngestError> {
    let tx_hash: TxHash = str_field(result, "transactionHash")?
        .parse()
        .map_err(|e| rpc_field("transactionHash", e))?;
    let block_number =
        hex_quantity(str_field(result, "blockNumber")?).map_err(|e| rpc_field("blockNumber", e))?;
    let gas_used =
        hex_quantity(str_field(result, "gasUsed")?).map_err(|e| rpc_field("gasUsed", e))?;
    // Pre-Byzantium receipts carry no status field; treat those as success.
    let status = match result.get("status").and_then(Value::as_str) {
        Some("0x0") => TxStatus::Failure,
        _ => TxStatus::Success,
    };

    let mut logs = Vec::new();
    match result.get("logs") {
        None | Some(Value::Null) => {}
        Some(Value::Array(raw_logs)) => {
            for (i, raw) in raw_logs.iter().enumerate() {
                logs.push(log_from_rpc(raw).map_err(|e| rpc_field(&format!("logs[{i}]"), e))?);
            }
        }
        Some(other) => {
            return Err(IngestError::Rpc(format!(
                "`logs` is neither an array nor null: {other}"
            )))
        }
    }
    logs.sort_by_key(|l| l.log_index);

    Ok(TransactionReceipt {
        tx_hash,
        block_number,
        status,
        gas_used,
        logs,
        call_records: Vec::<CallRecord>::new(),
    })
}

fn log_from_rpc(raw: &Value) -> Result<LogEntry, IngestError> {
    let address: H160 = codec::parse_h160(str_field(raw, "address")?).map_err(IngestError::Rpc)?;
    let topics: Vec<H256> = match raw.get("topics") {
        None | Some(Value::Null) => vec![],
        Some(Value::Array(items)) => items
            .iter()
            .map(|t| {
                t.as_str()
                    .ok_or_else(|| IngestError::Rpc("topic is not a string".into()))
                    .and_then(|s| codec::parse_h256(s).map_err(IngestError::Rpc))
            })
            .collect::<Result<_, _>>()?,
        Some(other) => {
            return Err(IngestError::Rpc(format!(
                "`topics` is not an array: {other}"
            )))
        }
    };
    if topics.len() > 4 {
        return Err(IngestError::Rpc(format!(
            "log carries {} topics, at most 4 allowed",
            topics.len()
        )));
    }
    let data = codec::from_hex(str_field(raw, "data")?, None).map_err(IngestError::Rpc)?;
    if data.len() % 32 != 0 {
        return Err(IngestError::Rpc(format!(
            "log data is {} bytes, must be a multiple of 32",
            data.len()
        )));
    }
    let log_index = hex_quantity(str_field(raw, "logIndex")?)? as u32;
    Ok(LogEntry {
        address,
        topics,
        data,
        log_index,
    })
}

fn str_field<'v>(v: &'v Value, key: &str) -> Result<&'v str, IngestError> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| IngestError::Rpc(format!("missing or non-string field `{key}`")))
}

fn rpc_field(field: &str, err: impl std::fmt::Display) -> IngestError {
    IngestError::Rpc(format!("field `{field}`: {err}"))
}

/// Parses a 0x-prefixed hex quantity ("0x4b1d26" -> 4_922_662).
fn hex_quantity(s: &str) -> Result<u64, IngestError> {
    let body = s
        .strip_prefix("0x")
        .ok_or_else(|| IngestError::Rpc(format!("quantity `{s}` is missing the 0x prefix")))?;
    u64::from_str_radix(body, 16)
        .map_err(|e| IngestError::Rpc(format!("quantity `{s}` is not hex: {e}")))
}
