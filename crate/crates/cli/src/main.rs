use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use swapforge_core::engine::{Behavior, Phase, Protocol};
use swapforge_core::graph::PartyId;
use swapforge_core::runner::{
    batch_protocol, batch_sequential, closed_forms, dump_plan, run_scenario, verdicts_json,
    ExitCode as RunExit, Overrides,
};
use swapforge_core::scenario::{load_scenario, parse_scenario, Scenario};

/// Bundled scenarios, addressable by name.
const BUNDLED: &[(&str, &str)] = &[
    ("example1", include_str!("../../../scenarios/example1.swap")),
    ("example2", include_str!("../../../scenarios/example2.swap")),
    (
        "fig2-three-party",
        include_str!("../../../scenarios/fig2-three-party.swap"),
    ),
    (
        "fig3-nested",
        include_str!("../../../scenarios/fig3-nested.swap"),
    ),
    (
        "three-alternatives-a",
        include_str!("../../../scenarios/three-alternatives-a.swap"),
    ),
    (
        "three-alternatives-b",
        include_str!("../../../scenarios/three-alternatives-b.swap"),
    ),
    (
        "shortcut-attack",
        include_str!("../../../scenarios/shortcut-attack.swap"),
    ),
    (
        "pathless-demo",
        include_str!("../../../scenarios/pathless-demo.swap"),
    ),
    (
        "infeasible",
        include_str!("../../../scenarios/infeasible.swap"),
    ),
];

#[derive(Parser)]
#[command(name = "swapforge", about = "Robust cross-chain swap simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Base,
    A,
    B,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Protocol {
        match p {
            ProtocolArg::Base => Protocol::Base,
            ProtocolArg::A => Protocol::A,
            ProtocolArg::B => Protocol::B,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario to completion and audit the outcome.
    Run {
        /// Path to a scenario file, or the name of a bundled scenario.
        scenario: String,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolArg>,
        #[arg(long)]
        seed: Option<u64>,
        /// Crash override, e.g. --crash carol@escrow or --crash bob@redeem:2
        #[arg(long)]
        crash: Vec<String>,
        /// Print the market-clearing plan (schemes, hashlocks, circuits).
        #[arg(long)]
        dump_plan: bool,
        /// Write the trace (JSON lines) to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the verdicts report (JSON) to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Monte-Carlo batches: sequential baseline vs the parallel protocols.
    Batch {
        scenario: String,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also run per-protocol batches (slower).
        #[arg(long)]
        protocols: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn load(name_or_path: &str) -> Result<Scenario, String> {
    let path = PathBuf::from(name_or_path);
    if path.exists() {
        return load_scenario(&path).map_err(|e| e.to_string());
    }
    for (name, text) in BUNDLED {
        if *name == name_or_path {
            return parse_scenario(text, name).map_err(|e| e.to_string());
        }
    }
    Err(format!(
        "no such file, and no bundled scenario named {name_or_path} (bundled: {})",
        BUNDLED
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn parse_crash(spec: &str) -> Result<(PartyId, Behavior), String> {
    let (party, rest) = spec
        .split_once('@')
        .ok_or_else(|| format!("--crash expects <party>@<phase>[:round], got {spec}"))?;
    let (phase, round) = match rest.split_once(':') {
        Some((p, r)) => (
            p,
            r.parse::<u64>().map_err(|_| format!("invalid round {r}"))?,
        ),
        None => (rest, 0),
    };
    let phase = match phase {
        "escrow" => Phase::Escrow,
        "select" => Phase::Select,
        "redeem" => Phase::Redeem,
        other => return Err(format!("unknown phase {other}")),
    };
    Ok((PartyId::new(party), Behavior::CrashAt { phase, round }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(64)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run {
            scenario,
            protocol,
            seed,
            crash,
            dump_plan: want_plan,
            trace,
            report,
        } => {
            let scenario = load(&scenario)?;
            let mut behaviors = BTreeMap::new();
            for c in &crash {
                let (party, behavior) = parse_crash(c)?;
                behaviors.insert(party, behavior);
            }
            let overrides = Overrides {
                protocol: protocol.map(Protocol::from),
                seed,
                behaviors,
                mode: None,
            };
            let outcome = run_scenario(&scenario, &overrides).map_err(|e| e.to_string())?;
            if want_plan {
                print!("{}", dump_plan(&outcome.plan));
            }
            if let Some(path) = trace {
                std::fs::write(&path, outcome.trace.to_json_lines())
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            let verdicts = verdicts_json(&outcome);
            if let Some(path) = report {
                std::fs::write(
                    &path,
                    serde_json::to_string_pretty(&verdicts).expect("serializes"),
                )
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&verdicts).expect("serializes")
            );
            Ok(match outcome.exit {
                RunExit::Ok => ExitCode::SUCCESS,
                RunExit::SafetyViolation => ExitCode::from(1),
                RunExit::Infeasible => ExitCode::from(2),
            })
        }
        Command::Batch {
            scenario,
            runs,
            seed,
            protocols,
            report,
        } => {
            let scenario = load(&scenario)?;
            let runs = runs.unwrap_or(scenario.run.runs);
            let seed = seed.unwrap_or(scenario.run.seed);
            let (sequential, model) =
                batch_sequential(&scenario, runs, seed).map_err(|e| e.to_string())?;
            let mut doc = serde_json::json!({
                "runs": runs,
                "seed": seed,
                "sequential": sequential,
                "sequential_model": model,
                "closed_forms": closed_forms(&scenario, model.epsilon_rounds),
            });
            if protocols {
                for p in [Protocol::A, Protocol::B] {
                    let rep = batch_protocol(&scenario, p, runs, seed)
                        .map_err(|e| e.to_string())?;
                    let key = match p {
                        Protocol::A => "protocol_a",
                        Protocol::B => "protocol_b",
                        Protocol::Base => "base",
                    };
                    doc[key] = serde_json::to_value(rep).expect("serializes");
                }
            }
            let text = serde_json::to_string_pretty(&doc).expect("serializes");
            if let Some(path) = report {
                std::fs::write(&path, &text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            println!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
