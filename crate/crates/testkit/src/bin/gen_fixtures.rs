//! Regenerates the fixture corpus: `fixtures/tx/<name>.json` from the
//! reference receipts, and `fixtures/llm/<digest>.txt` mock responses
//! keyed by the prompt digest of each fixture's trace.
//!
//! Run from the workspace root (or pass the fixtures directory):
//!     cargo run -p etrace-testkit --bin gen-fixtures [fixtures-dir]

use std::path::PathBuf;

use etrace_core::abi::AbiRegistry;
use etrace_core::ingest::receipt_to_fixture;
use etrace_core::llm::{build_prompt, default_conditions, DEFAULT_PROMPT_BUDGET};
use etrace_core::trace::build_trace;
use etrace_testkit::incidents;

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures"));
    let tx_dir = root.join("tx");
    let llm_dir = root.join("llm");
    std::fs::create_dir_all(&tx_dir).expect("create fixtures/tx");
    std::fs::create_dir_all(&llm_dir).expect("create fixtures/llm");

    let registry = AbiRegistry::builtin();
    let conditions = default_conditions();

    for (name, receipt, mock) in incidents::corpus() {
        let path = tx_dir.join(format!("{name}.json"));
        std::fs::write(&path, receipt_to_fixture(&receipt)).expect("write fixture");
        println!("wrote {}", path.display());

        if let Some(response) = mock {
            let trace = build_trace(&receipt, &registry).expect("reference receipt decodes");
            let bundle =
                build_prompt(&trace, &conditions, DEFAULT_PROMPT_BUDGET).expect("prompt fits");
            let path = llm_dir.join(format!("{}.txt", bundle.digest()));
            std::fs::write(&path, response).expect("write mock response");
            println!("wrote {}", path.display());
        }
    }
}
