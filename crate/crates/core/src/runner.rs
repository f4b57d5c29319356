//! Run orchestration: compiles a scenario into a plan and a simulation,
//! executes it, audits the trace, and aggregates Monte-Carlo batches.

use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;
use thiserror::Error;

use crate::clearing::{build_plan, ClearingError, ClearingPlan, CompiledSpec};
use crate::crypto::{Round, SignerRegistry, VerifyContext, VerifyMode};
use crate::engine::audit::{audit, AuditError, AuditReport};
use crate::engine::metrics::{
    aggregate, BatchReport, ClosedForms, RunStats, SequentialModel,
};
use crate::engine::{base_swap_setup, Behavior, Protocol, SimSetup, Simulation};
use crate::graph::PartyId;
use crate::ledger::{AssetState, Holding, Trace};
use crate::predicate::{
    build_liveness, build_reuse_restriction, build_safety, PredicateError,
};
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("predicate error: {0}")]
    Predicate(#[from] PredicateError),
    #[error("clearing error: {0}")]
    Clearing(#[from] ClearingError),
    #[error("audit error: {0}")]
    Audit(#[from] AuditError),
}

/// Exit-code contract: 0 = all conforming parties safe, 1 = safety
/// violation (an engine bug signal), 2 = trade infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    SafetyViolation = 1,
    Infeasible = 2,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trace: Trace,
    pub report: AuditReport,
    pub plan: ClearingPlan,
    pub infeasible: bool,
    pub exit: ExitCode,
    pub completion_round: Option<Round>,
    pub lock_deadline: Round,
    pub committed_schemes: Vec<usize>,
}

pub fn compile_specs(scenario: &Scenario) -> Result<Vec<CompiledSpec>, PredicateError> {
    scenario
        .specs
        .iter()
        .map(|spec| {
            Ok(CompiledSpec {
                party: spec.party.clone(),
                safety: build_safety(spec, &scenario.graph)?,
                liveness: build_liveness(spec, &scenario.graph)?,
                reuse: build_reuse_restriction(spec),
            })
        })
        .collect()
}

fn registry_for(scenario: &Scenario, seed: u64) -> SignerRegistry {
    let mut registry =
        SignerRegistry::from_seed(seed, scenario.parties.iter().map(|p| p.id.clone()));
    for p in &scenario.parties {
        if let Some(keyseed) = p.keyseed {
            registry.override_key(p.id.clone(), keyseed);
        }
    }
    registry
}

fn asset_states(scenario: &Scenario) -> Vec<AssetState> {
    scenario
        .assets
        .iter()
        .map(|a| AssetState {
            id: a.id.clone(),
            owner: a.owner.clone(),
            ledger: a.ledger.clone(),
            amount: a.amount,
            holding: Holding::Owner,
        })
        .collect()
}

/// Overrides applied on top of the scenario's run section (CLI flags).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub protocol: Option<Protocol>,
    pub seed: Option<u64>,
    pub behaviors: BTreeMap<PartyId, Behavior>,
    pub mode: Option<VerifyMode>,
}

pub fn build_setup(scenario: &Scenario, overrides: &Overrides) -> Result<SimSetup, RunError> {
    let protocol = overrides.protocol.unwrap_or(scenario.run.protocol);
    let seed = overrides.seed.unwrap_or(scenario.run.seed);
    let mode = match protocol {
        Protocol::B => VerifyMode::Undirected,
        _ => overrides
            .mode
            .or(scenario.run.mode)
            .unwrap_or_else(|| protocol.default_verify_mode()),
    };
    let specs = compile_specs(scenario)?;
    let registry = registry_for(scenario, seed);
    let mut behaviors = scenario.behaviors();
    for (p, b) in &overrides.behaviors {
        behaviors.insert(p.clone(), b.clone());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let setup = match protocol {
        Protocol::Base => {
            // The base swap runs the whole proposed graph as one scheme.
            base_swap_setup(
                &scenario.graph,
                asset_states(scenario),
                scenario.ledgers.clone(),
                specs,
                &Default::default(),
                behaviors,
                registry,
                mode,
                &mut rng,
            )
        }
        Protocol::A | Protocol::B => {
            let clearing_mode = protocol.clearing_mode();
            let plan = build_plan(
                &specs,
                &scenario.graph,
                scenario.run.solution_limit,
                clearing_mode,
                scenario.run.ranking.as_deref(),
                &mut rng,
            )?;
            SimSetup {
                graph: scenario.graph.clone(),
                assets: asset_states(scenario),
                ledgers: scenario.ledgers.clone(),
                specs,
                plan,
                protocol,
                mode,
                behaviors,
                registry,
                deadline_extension: scenario.run.deadline_extension,
            }
        }
    };
    Ok(setup)
}

pub fn run_scenario(scenario: &Scenario, overrides: &Overrides) -> Result<RunOutcome, RunError> {
    let setup = build_setup(scenario, overrides)?;
    let specs = setup.specs.clone();
    let plan = setup.plan.clone();
    let graph = setup.graph.clone();
    let clearing_mode = setup.protocol.clearing_mode();
    let conforming: BTreeMap<PartyId, bool> = setup
        .behaviors
        .iter()
        .map(|(p, b)| (p.clone(), b.is_conforming()))
        .collect();
    let result = Simulation::new(setup).run();
    let report = audit(
        &result.world.trace,
        &specs,
        &plan,
        &graph,
        &conforming,
        clearing_mode,
    )?;
    let exit = if result.infeasible {
        ExitCode::Infeasible
    } else if !report.all_conforming_safe() || !report.conservation_ok {
        ExitCode::SafetyViolation
    } else {
        ExitCode::Ok
    };
    Ok(RunOutcome {
        completion_round: report.completion_round,
        trace: result.world.trace,
        report,
        plan,
        infeasible: result.infeasible,
        exit,
        lock_deadline: result.lock_deadline,
        committed_schemes: result.committed.into_iter().collect(),
    })
}

/// Human-readable plan dump (`--dump-plan`).
pub fn dump_plan(plan: &ClearingPlan) -> String {
    let mut out = String::new();
    out.push_str(&format!("solutions: {}\n", plan.solutions.len()));
    for s in &plan.solutions {
        let arcs: Vec<String> = s.true_arcs().iter().map(|a| a.0.clone()).collect();
        out.push_str(&format!("  s{}: {{{}}}\n", s.id, arcs.join(", ")));
    }
    out.push_str("inclusion edges:\n");
    for (a, b) in &plan.dag_edges {
        out.push_str(&format!("  s{a} < s{b}\n"));
    }
    out.push_str("paths:\n");
    for p in &plan.paths {
        let nodes: Vec<String> = p.nodes.iter().map(|n| format!("s{n}")).collect();
        out.push_str(&format!("  q{}: {}\n", p.id, nodes.join(" -> ")));
    }
    let rps: Vec<String> = plan
        .redundancy_providers
        .iter()
        .map(|p| p.0.clone())
        .collect();
    out.push_str(&format!("redundancy providers: {{{}}}\n", rps.join(", ")));
    if let Some(pref) = &plan.preference {
        let order: Vec<String> = pref.iter().map(|s| format!("s{s}")).collect();
        out.push_str(&format!("preference order: {}\n", order.join(" > ")));
    }
    out.push_str("schemes:\n");
    for scheme in &plan.schemes {
        out.push_str(&format!(
            "  {} solution=s{} rank={:?}\n",
            scheme.label(),
            scheme.solution,
            scheme.rank
        ));
        for h in &scheme.hashlocks {
            let (gen, sol) = &plan.generator_of[h];
            out.push_str(&format!("    {h} generated by {gen} for s{sol}\n"));
        }
        out.push_str(&format!("    circuit: {}\n", scheme.circuit));
        if let Some(cb) = &scheme.circuit_b {
            out.push_str(&format!("    circuit_b: {cb}\n"));
        }
        let leaders: Vec<String> = scheme.escrow_leaders.iter().map(|p| p.0.clone()).collect();
        out.push_str(&format!("    escrow leaders: {{{}}}\n", leaders.join(", ")));
    }
    out
}

/// Per-run Monte-Carlo statistics for one protocol.
pub fn batch_protocol(
    scenario: &Scenario,
    protocol: Protocol,
    runs: usize,
    seed: u64,
) -> Result<BatchReport, RunError> {
    let mut stats = Vec::with_capacity(runs);
    for i in 0..runs {
        let overrides = Overrides {
            protocol: Some(protocol),
            seed: Some(seed.wrapping_add(i as u64)),
            ..Default::default()
        };
        let outcome = run_scenario(scenario, &overrides)?;
        let collateral = outcome
            .report
            .verdicts
            .iter()
            .map(|v| (v.party.clone(), v.collateral))
            .collect();
        stats.push(RunStats {
            completed: outcome.completion_round.is_some(),
            completion_round: outcome.completion_round,
            rounds: outcome.completion_round.unwrap_or(outcome.lock_deadline),
            attempts: 1,
            collateral,
        });
    }
    Ok(aggregate(
        match protocol {
            Protocol::Base => "base",
            Protocol::A => "A",
            Protocol::B => "B",
        },
        &stats,
        None,
    ))
}

/// Sequential-retry baseline: repeated single-scheme swaps. Each attempt
/// completes with probability q; a failed attempt ties assets up for m
/// rounds (the refund deadline of one swap), a successful one takes the
/// measured epsilon rounds. Attempt outcomes are simulated once per branch
/// and reused, since runs are deterministic given the behavior set.
pub fn batch_sequential(
    scenario: &Scenario,
    runs: usize,
    seed: u64,
) -> Result<(BatchReport, SequentialModel), RunError> {
    use rand_chacha::rand_core::RngCore;

    // Measure epsilon: a clean base-swap run over the first solution's
    // graph, which for the baseline we take as the scenario graph itself.
    let clean = run_scenario(
        scenario,
        &Overrides {
            protocol: Some(Protocol::Base),
            seed: Some(seed),
            behaviors: conforming_all(scenario),
            ..Default::default()
        },
    )?;
    let epsilon = clean
        .completion_round
        .unwrap_or(clean.lock_deadline);
    // Measure m: rounds until refund when the counterparty stalls. This is
    // the lock deadline of a single swap.
    let m = scenario
        .run
        .baseline_m
        .unwrap_or_else(|| {
            let ctx = VerifyContext::new(&scenario.graph);
            ctx.lock_deadline(VerifyMode::Directed)
        });
    let q = scenario.run.q;
    let model = SequentialModel {
        m_rounds: m,
        epsilon_rounds: epsilon,
        q,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut rounds: u64 = 0;
        let mut attempts: u64 = 0;
        loop {
            attempts += 1;
            // Draw success with probability q.
            let success = (rng.next_u64() as f64 / u64::MAX as f64) < q;
            if success {
                rounds += epsilon;
                break;
            }
            rounds += m;
        }
        stats.push(RunStats {
            completed: true,
            completion_round: Some(rounds),
            rounds,
            attempts,
            collateral: BTreeMap::new(),
        });
    }
    let report = aggregate("sequential", &stats, Some(model.expected_rounds()));
    Ok((report, model))
}

fn conforming_all(scenario: &Scenario) -> BTreeMap<PartyId, Behavior> {
    scenario
        .parties
        .iter()
        .map(|p| (p.id.clone(), Behavior::Conforming))
        .collect()
}

/// Closed-form comparison constants for the scenario's graph.
pub fn closed_forms(scenario: &Scenario, epsilon: u64) -> ClosedForms {
    let ctx = VerifyContext::new(&scenario.graph);
    ClosedForms::new(
        epsilon as f64,
        ctx.lock_deadline(VerifyMode::Directed),
        ctx.lock_deadline(VerifyMode::Undirected),
        scenario.run.gamma_rounds as f64,
        scenario.run.omega_rounds as f64,
        scenario.run.omega_rounds as f64,
    )
}

/// Verdicts as a JSON document for the artifacts file.
pub fn verdicts_json(outcome: &RunOutcome) -> serde_json::Value {
    json!({
        "exit": match outcome.exit {
            ExitCode::Ok => 0,
            ExitCode::SafetyViolation => 1,
            ExitCode::Infeasible => 2,
        },
        "infeasible": outcome.infeasible,
        "completion_round": outcome.completion_round,
        "conservation_ok": outcome.report.conservation_ok,
        "double_triggers": outcome.report.double_triggers,
        "triggered_arcs": outcome.report.triggered_arcs,
        "committed_schemes": outcome.committed_schemes,
        "verdicts": outcome.report.verdicts,
    })
}
