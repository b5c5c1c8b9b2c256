//! Command-line front end: `beepsim run` executes a seeded trial batch
//! and writes a CSV report (optionally a JSONL trace of trial 0);
//! `beepsim verify` replays a trace file against an independently built
//! channel and re-checks its payload.
//!
//! Exit codes: 0 = pass, 1 = safety violation or failed verification,
//! 2 = invalid invocation (bad flags, descriptors, or files).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beepsim::channel::ModelSpec;
use beepsim::emulation::EmulationParams;
use beepsim::graph::Graph;
use beepsim::harness::{
    run_batch, trace_for_trial, verify_trace, ExperimentSpec, ProtocolSpec, VerifyError,
};
use beepsim::protocols::{k_for, KPolicy, Variant};
use beepsim::trace::{from_jsonl, to_jsonl};

#[derive(Parser)]
#[command(
    name = "beepsim",
    about = "Simulator and experiment harness for beeping-model protocols",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded trials and write a CSV report.
    Run(RunArgs),
    /// Replay a JSONL trace and re-validate channel feedback and payload.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Protocol: collide | colour | colour-k | two-hop | degree | degree-bl.
    #[arg(long)]
    algo: String,
    /// Graph descriptor: ring:n, path:n, complete:n, star:n, gnp:n:p:seed,
    /// or file:edge-list-path.
    #[arg(long)]
    graph: String,
    /// Channel model: bl | bcdl | blcd | bcdlcd. Must match the protocol.
    #[arg(long)]
    model: ModelSpec,
    /// Number of trials; trial i runs with seed --seed + i.
    #[arg(long)]
    trials: u64,
    /// Base seed for the batch.
    #[arg(long)]
    seed: u64,
    /// Signature length / phase count k (collide, degree-bl). When absent
    /// it is derived from --eps, or from the graph size for a per-vertex
    /// failure probability of 1/n².
    #[arg(long)]
    k: Option<u32>,
    /// Failure bound ε in (0,1) used to derive k when --k is absent.
    #[arg(long)]
    eps: Option<f64>,
    /// Palette bound K for colour-k (colours are drawn from {0..K}).
    #[arg(long = "cap-K", value_name = "K")]
    cap_k: Option<usize>,
    /// Bid-probability variant for colour-k.
    #[arg(long, default_value = "basic")]
    variant: Variant,
    /// Slot budget override per trial.
    #[arg(long)]
    budget: Option<u64>,
    /// Comma-separated wisher vertices for collide (default: all).
    #[arg(long, value_delimiter = ',')]
    wishers: Option<Vec<usize>>,
    /// Write trial 0's full trace to this JSONL file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// CSV report path (columns: trial, seed, outcome, phases, slots,
    /// safety_ok, payload_digest).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSONL trace file written by `beepsim run --trace`.
    #[arg(long)]
    trace: PathBuf,
    /// Graph descriptor to replay against (default: the one recorded in
    /// the trace metadata).
    #[arg(long)]
    graph: Option<String>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Verify(args) => verify(args),
    }
}

/// Invalid invocation: report and exit 2.
macro_rules! spec_error {
    ($($msg:tt)*) => {{
        eprintln!("beepsim: {}", format!($($msg)*));
        return ExitCode::from(2);
    }};
}

fn run(args: RunArgs) -> ExitCode {
    // The graph is needed up front: k defaults scale with its size.
    let g = match Graph::from_descriptor(&args.graph) {
        Ok(g) => g,
        Err(e) => spec_error!("{e}"),
    };
    let n = g.vertex_count();

    let protocol = match args.algo.as_str() {
        "collide" => {
            let k = match (args.k, args.eps) {
                (Some(k), _) => k,
                (None, Some(eps)) => match k_for(KPolicy::PerVertex { eps }) {
                    Ok(k) => k,
                    Err(e) => spec_error!("{e}"),
                },
                (None, None) => match k_for(KPolicy::WhpLocal { n }) {
                    Ok(k) => k,
                    Err(e) => spec_error!("{e}"),
                },
            };
            ProtocolSpec::Collide { wishers: args.wishers.clone(), k }
        }
        "colour" => ProtocolSpec::Colour,
        "colour-k" => {
            let degree_bound = match args.cap_k {
                Some(k) => k,
                None => g.max_degree(),
            };
            ProtocolSpec::ColourBounded { degree_bound, variant: args.variant }
        }
        "two-hop" => ProtocolSpec::TwoHop,
        "degree" => ProtocolSpec::Degree,
        "degree-bl" => {
            let params = match (args.k, args.eps) {
                (Some(k), _) => EmulationParams::fixed(k),
                (None, Some(eps)) => match EmulationParams::per_graph(n, eps) {
                    Ok(p) => p,
                    Err(e) => spec_error!("{e}"),
                },
                (None, None) => EmulationParams::whp(n),
            };
            ProtocolSpec::DegreeBl { k: params.k }
        }
        other => spec_error!(
            "unknown algo `{other}` (expected collide|colour|colour-k|two-hop|degree|degree-bl)"
        ),
    };

    let spec = ExperimentSpec {
        graph: args.graph,
        protocol,
        model: args.model,
        trials: args.trials,
        base_seed: args.seed,
        slot_budget: args.budget,
    };

    let report = match run_batch(&spec) {
        Ok(r) => r,
        Err(e) => spec_error!("{e}"),
    };
    if let Err(e) = report.write_csv(&args.out) {
        spec_error!("writing {}: {e}", args.out.display());
    }
    if let Some(path) = &args.trace {
        let (meta, trace, result) = match trace_for_trial(&spec, 0) {
            Ok(t) => t,
            Err(e) => spec_error!("{e}"),
        };
        if let Err(e) = std::fs::write(path, to_jsonl(&meta, &trace, &result)) {
            spec_error!("writing {}: {e}", path.display());
        }
    }

    print!("{}", report.summary());
    println!("report: {}", args.out.display());
    if report.safety_violations > 0 {
        eprintln!(
            "beepsim: {} safety violation(s) — see safety_ok column",
            report.safety_violations
        );
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn verify(args: VerifyArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.trace) {
        Ok(t) => t,
        Err(e) => spec_error!("reading {}: {e}", args.trace.display()),
    };
    let (meta, trace, result) = match from_jsonl(&text) {
        Ok(parts) => parts,
        Err(e) => spec_error!("{e}"),
    };
    let descriptor = args.graph.as_deref().unwrap_or(&meta.graph);
    let g = match Graph::from_descriptor(descriptor) {
        Ok(g) => g,
        Err(e) => spec_error!("{e}"),
    };

    match verify_trace(&g, &meta, &trace, &result) {
        Ok(summary) => {
            println!(
                "{} on {} under {} (seed {}): {}",
                meta.protocol, descriptor, meta.model, meta.seed, summary
            );
            if summary.safety_violation {
                eprintln!("beepsim: payload violates the protocol's guarantee");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        // Structural problems mean the inputs were unusable; anything the
        // replay itself contradicts fails verification.
        Err(e @ (VerifyError::Trace(_) | VerifyError::Graph(_))) => {
            spec_error!("{e}")
        }
        Err(e) => {
            eprintln!("beepsim: verification failed: {e}");
            ExitCode::from(1)
        }
    }
}
