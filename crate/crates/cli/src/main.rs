//! `etrace`: analyze smart-contract transaction logs for attack patterns.
//!
//! Exit status: 0 = analyzed, no pattern; 2 = at least one confirmed or
//! detector-only pattern; 1 = operational error (including bad arguments).

mod settings;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::Parser;

use etrace_core::abi::AbiRegistry;
use etrace_core::detect::run_all_detectors;
use etrace_core::ingest::{load_fixture, TransactionReceipt, TxHash};
use etrace_core::llm::{
    analyze, build_prompt, default_conditions, parse_report, HttpBackend, LlmBackend, LlmError,
    MockBackend,
};
use etrace_core::report::{cross_validate, render};
use etrace_core::rpc::fetch_receipt;
use etrace_core::trace::{build_trace, event_line, trace_digest};
use etrace_core::RPC_URL_ENV;

use settings::{Args, Format, LlmStage, Settings};

fn main() {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Help goes to stdout, usage errors to stderr.
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let code = match run(args) {
        Ok(true) => 2,
        Ok(false) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

/// Runs the pipeline; `Ok(true)` means at least one actionable pattern.
fn run(args: Args) -> Result<bool> {
    if args.rpc.is_some() && args.tx.is_none() {
        bail!("--rpc only applies with --tx");
    }
    let settings = Settings::assemble(&args)?;

    let mut registry = AbiRegistry::builtin();
    for path in &args.abi {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read ABI file {}", path.display()))?;
        registry
            .load_extension(&text)
            .with_context(|| format!("in ABI file {}", path.display()))?;
    }

    let backend: Option<Box<dyn LlmBackend>> = match &settings.llm_stage {
        LlmStage::Off => None,
        LlmStage::Mock(dir) => Some(Box::new(MockBackend::new(dir)?)),
        LlmStage::Http {
            endpoint,
            model,
            temperature,
        } => Some(Box::new(HttpBackend::new(endpoint, model, *temperature)?)),
    };

    if let Some(dir) = &args.fixture_dir {
        return run_directory(dir, &settings, &registry, backend.as_deref());
    }

    let receipt = if let Some(path) = &args.fixture {
        load_fixture(path)?
    } else {
        let tx: TxHash = args
            .tx
            .as_deref()
            .expect("clap enforces one source")
            .parse()?;
        let endpoint = args
            .rpc
            .clone()
            .or_else(|| std::env::var(RPC_URL_ENV).ok())
            .ok_or_else(|| anyhow!("--tx needs an endpoint: pass --rpc or set {RPC_URL_ENV}"))?;
        fetch_receipt(&endpoint, &tx)?
    };

    let outcome = analyze_receipt(&receipt, &settings, &registry, backend.as_deref())?;
    print_bytes(&outcome.output);
    Ok(outcome.actionable)
}

struct Outcome {
    output: Vec<u8>,
    actionable: bool,
}

fn analyze_receipt(
    receipt: &TransactionReceipt,
    settings: &Settings,
    registry: &AbiRegistry,
    backend: Option<&dyn LlmBackend>,
) -> Result<Outcome> {
    let trace = build_trace(receipt, registry)?;

    let mut prelude = String::new();
    if settings.dump_trace {
        for event in &trace.events {
            prelude.push_str(&event_line(event));
            prelude.push('\n');
        }
        prelude.push('\n');
    }

    let conditions = default_conditions();
    if settings.dump_prompt {
        let bundle = build_prompt(&trace, &conditions, settings.prompt_budget)?;
        let output = format!("digest: {}\n\n{}", bundle.digest(), bundle.assemble());
        return Ok(Outcome {
            output: output.into_bytes(),
            actionable: false,
        });
    }

    let findings = run_all_detectors(&trace, &settings.detector);

    let (report, unparsed) = match backend {
        None => (None, None),
        Some(backend) => {
            let bundle = build_prompt(&trace, &conditions, settings.prompt_budget)?;
            let raw = analyze(&bundle, backend, &settings.retry)?;
            match parse_report(&raw, &trace) {
                Ok(report) => (Some(report), None),
                Err(LlmError::Unparseable { raw }) => (None, Some(raw)),
                Err(other) => return Err(other.into()),
            }
        }
    };

    let verdict = cross_validate(findings, report, unparsed, trace_digest(&trace));
    let actionable = verdict.any_actionable();
    let rendered = render(&verdict, &trace, settings.format == Format::Machine);

    let output = if settings.format == Format::Machine {
        // Keep stdout machine-clean; the trace dump goes to stderr.
        if !prelude.is_empty() {
            eprint!("{prelude}");
        }
        rendered
    } else {
        let mut out = prelude.into_bytes();
        out.extend_from_slice(&rendered);
        out
    };

    Ok(Outcome { output, actionable })
}

/// Analyzes every `.json` file in the directory, in path order. Files run
/// independently (and, when the LLM stage allows, concurrently); outputs
/// print per transaction in a stable order.
fn run_directory(
    dir: &Path,
    settings: &Settings,
    registry: &AbiRegistry,
    backend: Option<&dyn LlmBackend>,
) -> Result<bool> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read fixture directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .json fixtures in {}", dir.display());
    }

    let results: Vec<Mutex<Option<Result<Outcome>>>> =
        paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = settings.max_in_flight.max(1).min(paths.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= paths.len() {
                    break;
                }
                let result = load_fixture(&paths[i])
                    .map_err(anyhow::Error::from)
                    .and_then(|receipt| analyze_receipt(&receipt, settings, registry, backend));
                *results[i].lock().unwrap() = Some(result);
            });
        }
    });

    let mut actionable = false;
    let mut failures = 0usize;
    for (path, slot) in paths.iter().zip(results) {
        let result = slot.into_inner().unwrap().expect("every slot is filled");
        if settings.format == Format::Text {
            println!("== {} ==", path.display());
        }
        match result {
            Ok(outcome) => {
                print_bytes(&outcome.output);
                actionable |= outcome.actionable;
            }
            Err(e) => {
                eprintln!("error: {}: {e:#}", path.display());
                failures += 1;
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} fixtures failed", paths.len());
    }
    Ok(actionable)
}

fn print_bytes(bytes: &[u8]) {
    use std::io::Write;
    std::io::stdout()
        .write_all(bytes)
        .expect("stdout is writable");
}
