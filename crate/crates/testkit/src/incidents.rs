//! Reference receipts for the four incident fixtures shipped under
//! `fixtures/tx/`, plus the canned analysis responses the mock backend
//! serves for them. Logs are produced through the real encoder so the
//! fixtures exercise the same byte layout the decoder consumes.

use etrace_core::abi::{encode_log, AbiRegistry, DecodedParams, SolValue};
use etrace_core::ingest::{CallRecord, LogEntry, TransactionReceipt, TxStatus};
use etrace_core::{H160, U256};

fn addr(s: &str) -> H160 {
    s.parse().expect("well-formed address literal")
}

fn u(dec: &str) -> U256 {
    U256::from_dec_str(dec).expect("well-formed decimal literal")
}

fn log(name: &str, emitter: H160, idx: u32, values: Vec<(&str, SolValue)>) -> LogEntry {
    let params = DecodedParams {
        values: values
            .into_iter()
            .map(|(n, v)| (n.to_string(), v))
            .collect(),
    };
    let mut entry =
        encode_log(name, &params, &AbiRegistry::builtin()).expect("incident log encodes");
    entry.address = emitter;
    entry.log_index = idx;
    entry
}

fn transfer(emitter: H160, idx: u32, from: H160, to: H160, value: U256) -> LogEntry {
    log(
        "Transfer",
        emitter,
        idx,
        vec![
            ("from", SolValue::Address(from)),
            ("to", SolValue::Address(to)),
            ("value", SolValue::Uint(value)),
        ],
    )
}

/// The reentrancy incident: ten Transfer events, eight of them looping
/// between the attacker and the victim token contract.
pub fn xsurge_receipt() -> TransactionReceipt {
    let funder = addr("0x0ed74b23ad59f2a9438ffde0e9e1c9c9a3de3c6d");
    let attacker = addr("0x5f2e8c42c4b06ffd2b818c325fe662b0b2dfcfca");
    let victim = addr("0xe1e1aa58983fa9e42fc8b53cd53b30e309c85e54");

    let rows: [(H160, H160, &str); 10] = [
        (funder, attacker, "10000000000000000000000"),
        (victim, attacker, "1896600000000000"),
        (victim, attacker, "11235000000000000"),
        (attacker, victim, "1896600000000000"),
        (victim, attacker, "1296400000000000000"),
        (attacker, victim, "11235000000000000"),
        (victim, attacker, "1864100000000000000"),
        (attacker, victim, "1296400000000000000"),
        (attacker, victim, "1864100000000000000"),
        (attacker, funder, "10030000000000000000000"),
    ];
    let logs = rows
        .iter()
        .enumerate()
        .map(|(i, (from, to, value))| transfer(victim, i as u32, *from, *to, u(value)))
        .collect();

    TransactionReceipt {
        tx_hash: "0x7e2a5c6b1f0e4d3a9c8b7a6958473625140f3e2d1c0b9a89776655443322110f"
            .parse()
            .unwrap(),
        block_number: 10_087_723,
        status: TxStatus::Success,
        gas_used: 1_152_843,
        logs,
        call_records: vec![],
    }
}

/// The integer-overflow incident: two Transfer events of exactly 2^255.
pub fn beautychain_receipt() -> TransactionReceipt {
    let token = addr("0xc5d105e63711398af9bbff092d4b6769c82f793d");
    let sender = addr("0x09a3b3b7e1f51f4a9d5fd55c9c44a5de5d88b42e");
    let receiver_a = addr("0xb4d30cac5124b46c2df0cf3e3e1be05f42119033");
    let receiver_b = addr("0x0e823ffe018727585eaf5bc769fa80472f76c3d7");
    let overflowed = U256::one() << 255;

    TransactionReceipt {
        tx_hash: "0xad89ff16fd1ebe3a0a7cf4ed282302c06626c1af33221ebe0d3a470aba4a660f"
            .parse()
            .unwrap(),
        block_number: 5_482_787,
        status: TxStatus::Success,
        gas_used: 53_418,
        logs: vec![
            transfer(token, 0, sender, receiver_a, overflowed),
            transfer(token, 1, sender, receiver_b, overflowed),
        ],
        call_records: vec![],
    }
}

/// The flash-loan incident: fifteen events covering the loan, funded swaps with
/// reserve movement, and the closing withdrawal.
pub fn mevbot_receipt() -> TransactionReceipt {
    let zero = H160::zero();
    let staker = addr("0x2d0052aa421e2e24cf2b45e2f041dcc814bbbd11");
    let staking_pool = addr("0x88e6a0c2ddd26feeb64f039a2c41296fcb3f5640");
    let vault = addr("0xba12222222228d8ba445958a75a0704d566bf2c8");
    let weth = addr("0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2");
    let pool_a = addr("0x8ad599c3a0ff1de082011efddc58f1908eb6e6d8");
    let operator = addr("0x4b775f2e4d9f7c8e2b83aa58b6e8f44a9a1ef3a7");
    let pool_b = addr("0xb4e16d0168e52d35cacd2c6185b44281ec28c9dc");
    let usd = addr("0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48");

    let swap = |emitter: H160, idx: u32, sender: H160, to: H160, amounts: [&str; 4]| {
        log(
            "Swap",
            emitter,
            idx,
            vec![
                ("sender", SolValue::Address(sender)),
                ("amount0In", SolValue::Uint(u(amounts[0]))),
                ("amount1In", SolValue::Uint(u(amounts[1]))),
                ("amount0Out", SolValue::Uint(u(amounts[2]))),
                ("amount1Out", SolValue::Uint(u(amounts[3]))),
                ("to", SolValue::Address(to)),
            ],
        )
    };

    let logs = vec![
        transfer(weth, 0, staker, staking_pool, u("187740000000000000000")),
        transfer(usd, 1, zero, vault, U256::one()),
        log(
            "FlashLoan",
            vault,
            2,
            vec![
                ("from", SolValue::Address(zero)),
                ("to", SolValue::Address(weth)),
                ("amount", SolValue::Uint(U256::one())),
            ],
        ),
        transfer(usd, 3, pool_a, operator, u("158250000000000000000")),
        transfer(weth, 4, pool_b, operator, u("16941000000000000000")),
        log(
            "Approval",
            weth,
            5,
            vec![
                ("owner", SolValue::Address(operator)),
                ("spender", SolValue::Address(vault)),
                ("value", SolValue::Uint(U256::MAX)),
            ],
        ),
        swap(pool_b, 6, zero, zero, ["0", "0", "0", "0"]),
        transfer(usd, 7, operator, vault, u("14707000000")),
        transfer(usd, 8, vault, operator, u("11379000000000000000")),
        transfer(usd, 9, operator, pool_b, u("21896000000")),
        transfer(usd, 10, operator, pool_a, u("204540000000")),
        log(
            "Sync",
            pool_b,
            11,
            vec![
                ("in", SolValue::Uint(u("46287000000000"))),
                ("out", SolValue::Uint(u("35902000000000000000000"))),
            ],
        ),
        swap(
            pool_b,
            12,
            operator,
            operator,
            ["21896000000", "0", "0", "16941000000000000000"],
        ),
        swap(
            pool_a,
            13,
            operator,
            operator,
            ["204540000000", "0", "0", "0"],
        ),
        log(
            "Withdrawal",
            weth,
            14,
            vec![
                ("src", SolValue::Address(operator)),
                ("wad", SolValue::Uint(u("186570000000000000000"))),
            ],
        ),
    ];

    TransactionReceipt {
        tx_hash: "0x35ecf595864400696853c53edf3e3d60096639b6071cadea6076c9c6ceb921c1"
            .parse()
            .unwrap(),
        block_number: 15_752_859,
        status: TxStatus::Success,
        gas_used: 431_122,
        logs,
        call_records: vec![],
    }
}

/// The DoS incident: call-level rows only. Repeated small loans inflate
/// the creditor list until deletion needs more gas than the limit allows,
/// so the payout transaction itself fails.
pub fn governmental_receipt() -> TransactionReceipt {
    let jackpot = addr("0xf45717552f12ef7cb65e95476f217ea008167ae3");
    let early_lender = addr("0x94bd4150e41c717b7e7564484693073239715376");
    let reader = addr("0x490fdf9a073e5e9f04e342e7a4d1e2e9d5b8ef13");
    let attacker = addr("0x818dffc89f2a43aca28e46f04e8e9673b83daf39");

    let call = |name: &str, from: H160, value: &str, gas_used: u64| CallRecord {
        function_name: name.to_string(),
        from,
        to: jackpot,
        value: u(value),
        gas_used,
    };

    TransactionReceipt {
        tx_hash: "0x9b3e4f2a1d0c8b7a695847362514f0e3d2c1b0a998877665544332211ffeeddc"
            .parse()
            .unwrap(),
        block_number: 1_521_270,
        status: TxStatus::Failure,
        gas_used: 5_057_945,
        logs: vec![],
        call_records: vec![
            call("lendGM", early_lender, "10000000000000000", 36_855),
            call("totalPayedOut()", reader, "0", 21_651),
            call("lendGM", attacker, "1000000000000000", 2_532_963),
            call("lendGM", attacker, "1000000000000000", 5_057_945),
            call("lendGM", attacker, "1000000000000000", 5_057_945),
            call("lendGM", attacker, "1000000000000000", 5_057_945),
            call("lendGM", attacker, "1000000000000000", 5_057_945),
            call("Unknown Function", reader, "1000000000000000000", 750_000),
            call("Unknown Function", reader, "823600000000000000", 750_000),
            call("Unknown Function", reader, "10000000000000000", 750_000),
        ],
    }
}

/// A successful transaction that emitted nothing.
pub fn empty_receipt() -> TransactionReceipt {
    TransactionReceipt {
        tx_hash: "0x00000000000000000000000000000000000000000000000000000000000000e0"
            .parse()
            .unwrap(),
        block_number: 1,
        status: TxStatus::Success,
        gas_used: 21_000,
        logs: vec![],
        call_records: vec![],
    }
}

pub const XSURGE_MOCK: &str = "\
Event 0: 0x0ed7 funds 0x5f2e with 1.0000e22 tokens, a large opening position.
Event 1: 0xe1e1 sends 1.8966e15 tokens to 0x5f2e.
Event 2: 0xe1e1 sends 1.1235e16 tokens to 0x5f2e before any return flow settles.
Event 3: 0x5f2e returns 1.8966e15 tokens to 0xe1e1, mirroring event 1.
Event 4: 0xe1e1 pays out 1.2964e18 tokens to 0x5f2e.
Event 5: 0x5f2e returns 1.1235e16 tokens, mirroring event 2.
Event 6: 0xe1e1 pays out 1.8641e18 tokens to 0x5f2e.
Event 7: 0x5f2e returns 1.2964e18 tokens, mirroring event 4.
Event 8: 0x5f2e returns 1.8641e18 tokens, mirroring event 6.
Event 9: 0x5f2e sends 1.0030e22 tokens back to 0x0ed7, closing with a profit.

Summary
One external account opens a position, after which the token contract 0xe1e1 and the caller \
0x5f2e exchange funds back and forth in quick succession before the caller exits with more \
than it started with.

Pattern Analysis
The consecutive transfers between 0x5f2e and 0xe1e1 alternate direction with varying values, \
which is the shape of repeated calls into the same contract before its balances settle. This \
could be a reentrancy risk if state is updated only after the external calls.

Further Recommendation
Review the sell and purchase paths of 0xe1e1 for external calls made before balance updates, \
and add a reentrancy guard.
";

pub const BEAUTYCHAIN_MOCK: &str = "\
Event 0: 0x09a3 transfers 5.7896e76 tokens to 0xb4d3, a value far beyond any plausible supply.
Event 1: 0x09a3 transfers the same 5.7896e76 tokens to 0x0e82.

Summary
Two transfers move an astronomically large token amount from one sender to two receivers in a \
single transaction.

Pattern Analysis
The value equals 2^255, which no funded balance supports; arithmetic on the input amounts most \
likely wrapped past the unsigned range. This matches integer overflow.

Further Recommendation
Audit the batch transfer arithmetic for unchecked multiplication and re-issue balances from a \
pre-incident snapshot.
";

pub const MEVBOT_MOCK: &str = "\
Event 0: 0x2d00 stakes 1.8774e20 into 0x88e6.
Event 1: a marker transfer of 1.0000e0 is minted to 0xba12.
Event 2: an uncollateralized loan is opened toward 0xc02a.
Event 3: 0x8ad5 releases 1.5825e20 to the operator 0x4b77.
Event 4: 0xb4e1 releases 1.6941e19 to the operator 0x4b77.
Event 5: 0x4b77 grants 0xba12 an effectively unlimited allowance.
Event 6: a pool reports an exchange with zero outputs.
Event 7: 0x4b77 pays 1.4707e10 to 0xba12.
Event 8: 0xba12 returns 1.1379e19 to 0x4b77.
Event 9: 0x4b77 pays 2.1896e10 into 0xb4e1.
Event 10: 0x4b77 pays 2.0454e11 into 0x8ad5.
Event 11: pool reserves move sharply, 4.6287e13 in against 3.5902e22 out.
Event 12: 0x4b77 trades 2.1896e10 for 1.6941e19.
Event 13: 0x4b77 trades 2.0454e11 with nothing returned yet.
Event 14: 0x4b77 withdraws 1.8657e20, leaving with the accumulated difference.

Summary
Borrowed funds cycle through several pools within one transaction: positions open, prices move \
sharply, and the operator exits with a large withdrawal.

Pattern Analysis
A FlashLoanAttack event shape is present: the flash loan is followed by Swap operations with \
abnormal price movement and a closing Withdrawal that realizes the profit.

Further Recommendation
Price-sensitive pools should not trust spot reserves moved within the same transaction; compare \
against time-weighted references before honoring exits.
";

pub const GOVERNMENTAL_MOCK: &str = "\
Event 0: 0x94bd lends 1.0000e16 through lendGM at a modest 36855 gas.
Event 1: 0x490f reads totalPayedOut() cheaply.
Event 2: 0x818d lends 1.0000e15 and gas jumps to 2532963.
Event 3: 0x818d repeats the same small loan; gas reaches 5057945.
Event 4: 0x818d repeats again at 5057945 gas.
Event 5: 0x818d repeats again at 5057945 gas.
Event 6: 0x818d repeats again at 5057945 gas.
Event 7: an unresolved function call moves 1.0000e18 at 750000 gas.
Event 8: an unresolved function call moves 8.2360e17 at 750000 gas.
Event 9: an unresolved function call moves 1.0000e16 at 750000 gas.

Summary
One caller repeats the same tiny loan while the gas needed per call climbs steeply, and the \
final calls burn far more gas than any ordinary interaction.

Pattern Analysis
Repeated low-value lendGM calls from 0x818d inflate stored state until the required gas of \
5057945 exceeds the 4712388 transaction limit, so the payout path can no longer run. This is \
consistent with a DoS attack.

Further Recommendation
Cap the creditor list, or restructure the payout so each creditor withdraws individually \
instead of deleting the whole list at once.
";

/// Fixture name, reference receipt, and the mock response keyed to it
/// (none for the empty sample).
pub fn corpus() -> Vec<(&'static str, TransactionReceipt, Option<&'static str>)> {
    vec![
        ("xsurge", xsurge_receipt(), Some(XSURGE_MOCK)),
        ("beautychain", beautychain_receipt(), Some(BEAUTYCHAIN_MOCK)),
        ("mevbot", mevbot_receipt(), Some(MEVBOT_MOCK)),
        (
            "governmental",
            governmental_receipt(),
            Some(GOVERNMENTAL_MOCK),
        ),
        ("empty", empty_receipt(), None),
    ]
}
