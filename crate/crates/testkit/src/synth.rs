//! Seeded random trace and parameter generation for differential and
//! property tests. Everything is a pure function of the RNG state, so a
//! fixed seed reproduces the exact case.

use std::collections::BTreeMap;

use etrace_core::abi::{encode_log, AbiRegistry, DecodedParams, EventAbi, SolType, SolValue};
use etrace_core::ingest::{CallRecord, LogEntry, TransactionReceipt, TxHash, TxStatus};
use etrace_core::trace::{DecodedEvent, EventOrigin, EventTrace};
use etrace_core::{H160, H256, U256};
use rand::Rng;

const LOG_NAMES: [&str; 9] = [
    "Transfer",
    "Transfer",
    "Transfer",
    "Approval",
    "Swap",
    "Sync",
    "FlashLoan",
    "Borrow",
    "Withdrawal",
];
const CALL_NAMES: [&str; 3] = ["lendGM", "claim", "poke"];

fn random_value(rng: &mut impl Rng) -> U256 {
    match rng.random_range(0..10u8) {
        0 => U256::zero(),
        1..=5 => U256::from(rng.random_range(1..=10_000_000_000_000_000u64)),
        6 | 7 => {
            U256::from(rng.random_range(0..2_000u64)) * U256::from(10u64).pow(U256::from(15u8))
        }
        8 => U256::one() << rng.random_range(248..=255u32),
        _ => U256::MAX - U256::from(rng.random_range(0..3u64)),
    }
}

/// A trace of up to `max_events` events over up to `max_addrs` addresses,
/// mixing log-origin and call-origin rows with values and gas figures that
/// straddle every detector threshold.
pub fn random_trace(rng: &mut impl Rng, max_events: usize, max_addrs: usize) -> EventTrace {
    let addr_count = rng.random_range(1..=max_addrs);
    let pool: Vec<H160> = (0..addr_count)
        .map(|i| H160::repeat_byte(i as u8 + 1))
        .collect();
    let pick = |rng: &mut dyn rand::RngCore| pool[rng.random_range(0..pool.len())];

    let n = rng.random_range(0..=max_events);
    let mut last_gas: BTreeMap<(String, H160), u64> = BTreeMap::new();
    let mut events = Vec::with_capacity(n);

    for index in 0..n {
        let is_call = rng.random_range(0..100u8) < 25;
        let name = if is_call {
            CALL_NAMES[rng.random_range(0..CALL_NAMES.len())]
        } else {
            LOG_NAMES[rng.random_range(0..LOG_NAMES.len())]
        };

        let emitter = pick(rng);
        let (from, to) = if is_call || name == "Transfer" {
            (Some(pick(rng)), Some(pick(rng)))
        } else {
            (
                rng.random_bool(0.7).then(|| pick(rng)),
                rng.random_bool(0.7).then(|| pick(rng)),
            )
        };
        let value = rng.random_bool(0.85).then(|| random_value(rng));

        let gas_used = if is_call {
            let from = from.expect("calls carry a caller");
            let key = (name.to_string(), from);
            let prev = last_gas.get(&key).copied().unwrap_or(21_000);
            // Often climb from the group's previous figure so the DoS
            // repetition rule has realistic monotone runs to find.
            let gas = if rng.random_bool(0.6) {
                prev.saturating_add(rng.random_range(0..900_000u64))
            } else {
                rng.random_range(21_000..6_000_000u64)
            };
            last_gas.insert(key, gas);
            Some(gas)
        } else {
            rng.random_bool(0.1)
                .then(|| rng.random_range(21_000..6_000_000u64))
        };

        events.push(DecodedEvent {
            index,
            name: name.to_string(),
            emitter,
            from,
            to,
            value,
            gas_used,
            origin: if is_call {
                EventOrigin::Call
            } else {
                EventOrigin::Log
            },
            extra: BTreeMap::new(),
        });
    }

    let mut hash = [0u8; 32];
    rng.fill(&mut hash);
    EventTrace {
        tx_hash: TxHash(H256::from(hash)),
        status: if rng.random_bool(0.9) {
            TxStatus::Success
        } else {
            TxStatus::Failure
        },
        gas_used_total: rng.random_range(21_000..8_000_000u64),
        events,
    }
}

/// Random well-typed parameters for an event ABI, hitting the 0 and
/// max-word boundaries often.
pub fn random_params(rng: &mut impl Rng, abi: &EventAbi) -> DecodedParams {
    let values = abi
        .params
        .iter()
        .map(|p| {
            let value = match p.ty {
                SolType::Address => {
                    let mut bytes = [0u8; 20];
                    rng.fill(&mut bytes);
                    SolValue::Address(H160::from(bytes))
                }
                SolType::Uint256 => SolValue::Uint(match rng.random_range(0..6u8) {
                    0 => U256::zero(),
                    1 => U256::MAX,
                    2 => U256::one() << rng.random_range(0..=255u32),
                    _ => {
                        let mut bytes = [0u8; 32];
                        rng.fill(&mut bytes);
                        U256::from_big_endian(&bytes)
                    }
                }),
                SolType::Bool => SolValue::Bool(rng.random_bool(0.5)),
                SolType::Bytes32 => {
                    let mut bytes = [0u8; 32];
                    rng.fill(&mut bytes);
                    SolValue::Word(H256::from(bytes))
                }
            };
            (p.name.clone(), value)
        })
        .collect();
    DecodedParams { values }
}

/// A structurally valid random receipt: registry-encoded logs mixed with
/// unknown-signature logs (strictly increasing log indices) plus a few
/// call records.
pub fn random_receipt(rng: &mut impl Rng) -> TransactionReceipt {
    let registry = AbiRegistry::builtin();
    let abis: Vec<EventAbi> = registry.iter().cloned().collect();

    let random_h160 = |rng: &mut dyn rand::RngCore| {
        let mut bytes = [0u8; 20];
        rng.fill(&mut bytes);
        H160::from(bytes)
    };

    let mut logs = Vec::new();
    let mut log_index = 0u32;
    for _ in 0..rng.random_range(0..10usize) {
        let mut entry = if rng.random_bool(0.85) {
            let abi = &abis[rng.random_range(0..abis.len())];
            encode_log(&abi.name, &random_params(rng, abi), &registry)
                .expect("generated params fit the ABI")
        } else {
            let mut topics = Vec::new();
            for _ in 0..rng.random_range(0..=4usize) {
                let mut word = [0u8; 32];
                rng.fill(&mut word);
                topics.push(H256::from(word));
            }
            let mut data = vec![0u8; 32 * rng.random_range(0..3usize)];
            rng.fill(data.as_mut_slice());
            LogEntry {
                address: H160::zero(),
                topics,
                data,
                log_index: 0,
            }
        };
        entry.address = random_h160(rng);
        log_index += rng.random_range(1..=3u32);
        entry.log_index = log_index;
        logs.push(entry);
    }

    let call_records = (0..rng.random_range(0..5usize))
        .map(|_| CallRecord {
            function_name: CALL_NAMES[rng.random_range(0..CALL_NAMES.len())].to_string(),
            from: random_h160(rng),
            to: random_h160(rng),
            value: random_value(rng),
            gas_used: rng.random_range(21_000..6_000_000u64),
        })
        .collect();

    let mut hash = [0u8; 32];
    rng.fill(&mut hash);
    TransactionReceipt {
        tx_hash: TxHash(H256::from(hash)),
        block_number: rng.random_range(1..20_000_000u64),
        status: if rng.random_bool(0.9) {
            TxStatus::Success
        } else {
            TxStatus::Failure
        },
        gas_used: rng.random_range(21_000..8_000_000u64),
        logs,
        call_records,
    }
}
