//! Post-run auditor: reconstructs the final arc assignment from the trace
//! and checks every party's predicates, collateral, and (for ProtocolB)
//! level consistency, purely from the event log.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::clearing::{ClearingMode, ClearingPlan, CompiledSpec, SolutionId};
use crate::crypto::Round;
use crate::graph::{ArcId, AssetId, Digraph, PartyId};
use crate::ledger::Trace;
use crate::predicate::evaluate;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuditError {
    #[error("trace references unknown arc {0}")]
    UnknownArc(String),
    #[error("trace references unknown asset {0}")]
    UnknownAsset(String),
    #[error("contract {0} settled twice")]
    DoubleSettlement(String),
    #[error("malformed event detail: {0}")]
    Malformed(String),
}

/// Per-party outcome classification.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub party: String,
    pub conforming: bool,
    /// S_x holds on the final assignment (with r_x in ProtocolB).
    pub safety_ok: bool,
    /// L_x holds on the final assignment.
    pub liveness_ok: bool,
    /// Maximum simultaneously escrowed units.
    pub collateral: u64,
    /// Round the party's last incident transfer triggered.
    pub completion_round: Option<Round>,
    /// Levels at which the party's outgoing arcs triggered (ProtocolB).
    pub levels_outgoing: BTreeSet<usize>,
    /// Two triggered incident arcs settled under solutions whose joint
    /// completion falsifies this party's predicate.
    pub conflicting_levels: bool,
}

/// Whole-run audit output.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub verdicts: Vec<Verdict>,
    pub final_assignment: BTreeMap<String, bool>,
    pub triggered_arcs: BTreeSet<String>,
    pub conservation_ok: bool,
    pub double_triggers: Vec<String>,
    pub completion_round: Option<Round>,
}

impl AuditReport {
    pub fn verdict(&self, party: &PartyId) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.party == party.0)
    }

    pub fn all_conforming_safe(&self) -> bool {
        self.verdicts.iter().all(|v| !v.conforming || v.safety_ok)
    }
}

struct SettledEscrow {
    escrower: PartyId,
    asset: AssetId,
    amount: u64,
    start: Round,
    end: Option<Round>,
}

/// Reconstructs outcomes from the trace. `conforming` flags which parties
/// followed the protocol this run.
pub fn audit(
    trace: &Trace,
    specs: &[CompiledSpec],
    plan: &ClearingPlan,
    graph: &Digraph,
    conforming: &BTreeMap<PartyId, bool>,
    mode: ClearingMode,
) -> Result<AuditReport, AuditError> {
    let known_arcs: BTreeSet<&str> = graph.arc_ids().map(|a| a.0.as_str()).collect();
    let mut escrows: BTreeMap<String, SettledEscrow> = BTreeMap::new();
    let mut triggered: BTreeMap<String, (ArcId, PartyId, Round, Option<usize>, SolutionId)> =
        BTreeMap::new();
    let mut double_triggers = Vec::new();
    let mut max_round: Round = 0;

    for e in &trace.events {
        max_round = max_round.max(e.round);
        match e.kind.as_str() {
            "escrow" => {
                let contract = e
                    .contract
                    .clone()
                    .ok_or_else(|| AuditError::Malformed("escrow without contract".into()))?;
                let party = e
                    .party
                    .clone()
                    .ok_or_else(|| AuditError::Malformed("escrow without party".into()))?;
                let asset = detail_str(e, "asset")?;
                let amount = detail_u64(e, "amount")?;
                escrows.insert(
                    contract,
                    SettledEscrow {
                        escrower: PartyId(party),
                        asset: AssetId(asset),
                        amount,
                        start: e.round,
                        end: None,
                    },
                );
            }
            "triggered" => {
                let contract = e
                    .contract
                    .clone()
                    .ok_or_else(|| AuditError::Malformed("trigger without contract".into()))?;
                let arc = detail_str(e, "arc")?;
                if !known_arcs.contains(arc.as_str()) {
                    return Err(AuditError::UnknownArc(arc));
                }
                let recipient = e
                    .party
                    .clone()
                    .ok_or_else(|| AuditError::Malformed("trigger without recipient".into()))?;
                let level = e.detail.get("level").and_then(|v| v.as_u64()).map(|v| v as usize);
                let solution = detail_u64(e, "solution")? as SolutionId;
                if triggered.contains_key(&contract) {
                    double_triggers.push(contract.clone());
                }
                if let Some(esc) = escrows.get_mut(&contract) {
                    if esc.end.is_some() {
                        return Err(AuditError::DoubleSettlement(contract.clone()));
                    }
                    esc.end = Some(e.round);
                }
                triggered.insert(
                    contract,
                    (ArcId(arc), PartyId(recipient), e.round, level, solution),
                );
            }
            "refunded" => {
                let contract = e
                    .contract
                    .clone()
                    .ok_or_else(|| AuditError::Malformed("refund without contract".into()))?;
                if triggered.contains_key(&contract) {
                    return Err(AuditError::DoubleSettlement(contract));
                }
                if let Some(esc) = escrows.get_mut(&contract) {
                    if esc.end.is_some() {
                        return Err(AuditError::DoubleSettlement(contract));
                    }
                    esc.end = Some(e.round);
                }
            }
            _ => {}
        }
    }

    // Final assignment: an arc is true iff its transfer triggered.
    let mut assignment: BTreeMap<ArcId, bool> = graph
        .arc_ids()
        .map(|a| (a.clone(), false))
        .collect();
    for (arc, _, _, _, _) in triggered.values() {
        assignment.insert(arc.clone(), true);
    }

    // Conservation: every escrowed asset was escrowed exactly once at a
    // time and every settlement closed an existing escrow.
    let conservation_ok = check_conservation(&escrows, max_round);

    let completion_round = triggered.values().map(|(_, _, r, _, _)| *r).max();

    let mut verdicts = Vec::new();
    for spec in specs {
        let party = &spec.party;
        let is_conforming = conforming.get(party).copied().unwrap_or(true);
        let clearing_pred = spec.clearing_predicate(mode);
        let safety_ok = evaluate(&clearing_pred, &assignment).unwrap_or(false);
        let liveness_ok = safety_ok
            && evaluate(&spec.liveness, &assignment).unwrap_or(false);

        let mut collateral_events: Vec<(Round, i64)> = Vec::new();
        for esc in escrows.values().filter(|e| &e.escrower == party) {
            collateral_events.push((esc.start, esc.amount as i64));
            if let Some(end) = esc.end {
                // The asset stays collateral through its settlement round.
                collateral_events.push((end + 1, -(esc.amount as i64)));
            }
        }
        collateral_events.sort();
        let mut level_sum: i64 = 0;
        let mut collateral: i64 = 0;
        for (_, delta) in collateral_events {
            level_sum += delta;
            collateral = collateral.max(level_sum);
        }

        let incident: Vec<(&ArcId, &PartyId, Round, Option<usize>, SolutionId)> = triggered
            .values()
            .filter_map(|(arc, rec, round, level, sol)| {
                graph.arc(arc).and_then(|a| {
                    if &a.from == party || &a.to == party {
                        Some((arc, rec, *round, *level, *sol))
                    } else {
                        None
                    }
                })
            })
            .collect();
        let completion = incident.iter().map(|(_, _, r, _, _)| *r).max();
        let levels_outgoing: BTreeSet<usize> = incident
            .iter()
            .filter(|(arc, _, _, _, _)| graph.arc(arc).is_some_and(|a| &a.from == party))
            .filter_map(|(_, _, _, level, _)| *level)
            .collect();

        // Two incident triggers at different levels are a violation only if
        // their solutions conflict (completing both falsifies a predicate).
        let mut conflicting_levels = false;
        for i in 0..incident.len() {
            for j in (i + 1)..incident.len() {
                let (si, sj) = (incident[i].4, incident[j].4);
                if si != sj && plan.conflict(si, sj) && incident[i].3 != incident[j].3 {
                    conflicting_levels = true;
                }
            }
        }

        verdicts.push(Verdict {
            party: party.0.clone(),
            conforming: is_conforming,
            safety_ok,
            liveness_ok,
            collateral: collateral.max(0) as u64,
            completion_round: completion,
            levels_outgoing,
            conflicting_levels,
        });
    }

    Ok(AuditReport {
        verdicts,
        final_assignment: assignment
            .into_iter()
            .map(|(k, v)| (k.0, v))
            .collect(),
        triggered_arcs: triggered
            .values()
            .map(|(a, _, _, _, _)| a.0.clone())
            .collect(),
        conservation_ok,
        double_triggers,
        completion_round,
    })
}

fn check_conservation(escrows: &BTreeMap<String, SettledEscrow>, max_round: Round) -> bool {
    // Per asset: intervals [start, end] of being escrowed must not overlap
    // (an asset sits in at most one live contract at a time).
    let mut by_asset: BTreeMap<&AssetId, Vec<(Round, Round)>> = BTreeMap::new();
    for esc in escrows.values() {
        by_asset
            .entry(&esc.asset)
            .or_default()
            .push((esc.start, esc.end.unwrap_or(max_round + 1)));
    }
    for intervals in by_asset.values_mut() {
        intervals.sort();
        for w in intervals.windows(2) {
            if w[1].0 <= w[0].1 {
                return false;
            }
        }
    }
    true
}

fn detail_str(e: &crate::ledger::TraceEvent, key: &str) -> Result<String, AuditError> {
    e.detail
        .get(key)
        .and_then(|v| v.as_str())
        .map(|s| s.to_string())
        .ok_or_else(|| AuditError::Malformed(format!("missing {key}")))
}

fn detail_u64(e: &crate::ledger::TraceEvent, key: &str) -> Result<u64, AuditError> {
    e.detail
        .get(key)
        .and_then(|v| v.as_u64())
        .ok_or_else(|| AuditError::Malformed(format!("missing {key}")))
}
