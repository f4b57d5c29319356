//! Simulated tamper-proof ledgers under a synchronous round clock.
//!
//! A transaction submitted in round r is processed (and becomes visible) in
//! round r+1: Delta is exactly one round. `step_round` is the only mutation
//! point; it delivers due transactions in a deterministic order, expires
//! locks whose deadline has arrived, and settles contracts. Every state
//! change lands in the append-only trace.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::clearing::{SchemeId, SolutionId};
use crate::crypto::{
    evaluate_circuit, sha256, verify_hashkey, CircuitExpr, Hashkey, Hashlock, LockState, Round,
    SignerRegistry, Tri, VerifyContext, VerifyMode,
};
use crate::graph::{ArcId, AssetId, PartyId};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LedgerId(pub String);

impl LedgerId {
    pub fn new(id: impl Into<String>) -> Self {
        LedgerId(id.into())
    }
}

impl fmt::Display for LedgerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContractId(pub u32);

impl fmt::Display for ContractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("unknown asset {0}")]
    UnknownAsset(AssetId),
    #[error("party {party} does not own asset {asset}")]
    NotOwner { party: PartyId, asset: AssetId },
    #[error("asset {0} is already escrowed")]
    AlreadyEscrowed(AssetId),
    #[error("unknown contract {0}")]
    UnknownContract(ContractId),
    #[error("party {party} is not the escrower of contract {contract}")]
    NotEscrower { party: PartyId, contract: ContractId },
    #[error("contract {0} is no longer open")]
    ContractClosed(ContractId),
}

/// One clause of a contract circuit: a scheme's circuit plus the transfer it
/// completes when true. In ProtocolA every clause of a contract pays the
/// same recipient (one contract per arc); in ProtocolB clauses may name
/// different recipients on the same escrowed asset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub scheme: SchemeId,
    pub solution: SolutionId,
    /// Preference index in ProtocolB (0 = most preferred); None in A.
    pub rank: Option<usize>,
    pub arc: ArcId,
    pub recipient: PartyId,
    pub expr: CircuitExpr,
}

impl Clause {
    fn priority(&self) -> (usize, SchemeId) {
        (self.rank.unwrap_or(0), self.scheme)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractStatus {
    Open,
    Triggered {
        scheme: SchemeId,
        solution: SolutionId,
        arc: ArcId,
        recipient: PartyId,
        round: Round,
        level: Option<usize>,
    },
    Refunded {
        round: Round,
    },
}

#[derive(Debug, Clone)]
pub struct EscrowContract {
    pub id: ContractId,
    pub ledger: LedgerId,
    pub escrower: PartyId,
    pub asset: AssetId,
    pub amount: u64,
    pub arcs: BTreeSet<ArcId>,
    pub clauses: Vec<Clause>,
    pub lock_states: BTreeMap<Hashlock, LockState>,
    /// The first accepted key per unlocked hashlock, kept public so relays
    /// can extend it.
    pub unlocking_keys: BTreeMap<Hashlock, Hashkey>,
    pub deadline: Round,
    pub status: ContractStatus,
    pub mode: VerifyMode,
    pub created_round: Round,
}

impl EscrowContract {
    pub fn is_open(&self) -> bool {
        matches!(self.status, ContractStatus::Open)
    }

    pub fn has_clause_for_scheme(&self, scheme: SchemeId) -> bool {
        self.clauses.iter().any(|c| c.scheme == scheme)
    }

    fn register_clause_atoms(&mut self, clause: &Clause) {
        for atom in clause.expr.atoms() {
            self.lock_states.entry(atom).or_insert(LockState::Open);
        }
    }
}

/// Where an asset currently sits. Exactly one holder at any time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Holding {
    Owner,
    Contract(ContractId),
    Recipient(PartyId),
}

#[derive(Debug, Clone)]
pub struct AssetState {
    pub id: AssetId,
    pub owner: PartyId,
    pub ledger: LedgerId,
    pub amount: u64,
    pub holding: Holding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxPayload {
    Escrow {
        asset: AssetId,
        arcs: Vec<ArcId>,
        clauses: Vec<Clause>,
        deadline: Round,
    },
    ExtendCircuit {
        contract: ContractId,
        clauses: Vec<Clause>,
    },
    SubmitHashkey {
        contract: ContractId,
        key: Hashkey,
    },
    Claim {
        contract: ContractId,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Transaction {
    pub sender: PartyId,
    pub payload: TxPayload,
    pub submit_round: Round,
    pub visible_round: Round,
}

impl Transaction {
    fn payload_hash(&self) -> [u8; 32] {
        sha256(&serde_json::to_vec(&self.payload).expect("payload serializes"))
    }
}

/// One trace record. Field order is fixed for golden-file diffing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEvent {
    pub round: Round,
    pub ledger: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub contract: Option<String>,
    pub party: Option<String>,
    pub detail: Value,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn push(
        &mut self,
        round: Round,
        ledger: impl Into<String>,
        kind: &str,
        contract: Option<ContractId>,
        party: Option<&PartyId>,
        detail: Value,
    ) {
        self.events.push(TraceEvent {
            round,
            ledger: ledger.into(),
            kind: kind.to_string(),
            contract: contract.map(|c| c.to_string()),
            party: party.map(|p| p.to_string()),
            detail,
        });
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(s: &str) -> Result<Trace, serde_json::Error> {
        let mut events = Vec::new();
        for line in s.lines() {
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(line)?);
        }
        Ok(Trace { events })
    }
}

/// All ledgers plus the shared round clock.
#[derive(Debug, Clone)]
pub struct World {
    pub round: Round,
    pub ledgers: BTreeSet<LedgerId>,
    pub assets: BTreeMap<AssetId, AssetState>,
    pub contracts: BTreeMap<ContractId, EscrowContract>,
    pub trace: Trace,
    queue: Vec<Transaction>,
    next_contract: u32,
}

impl World {
    pub fn new(
        ledgers: impl IntoIterator<Item = LedgerId>,
        assets: impl IntoIterator<Item = AssetState>,
    ) -> Self {
        World {
            round: 0,
            ledgers: ledgers.into_iter().collect(),
            assets: assets.into_iter().map(|a| (a.id.clone(), a)).collect(),
            contracts: BTreeMap::new(),
            trace: Trace::default(),
            queue: Vec::new(),
            next_contract: 0,
        }
    }

    /// Queues a transaction; it is processed one round later (Delta = 1).
    pub fn submit(&mut self, sender: PartyId, payload: TxPayload) {
        self.queue.push(Transaction {
            sender,
            payload,
            submit_round: self.round,
            visible_round: self.round + 1,
        });
    }

    pub fn has_pending(&self) -> bool {
        !self.queue.is_empty()
    }

    pub fn open_contracts(&self) -> impl Iterator<Item = &EscrowContract> {
        self.contracts.values().filter(|c| c.is_open())
    }

    pub fn all_settled(&self) -> bool {
        self.contracts.values().all(|c| !c.is_open())
    }

    /// The open contract currently escrowing `asset`, if any.
    pub fn contract_for_asset(&self, asset: &AssetId) -> Option<&EscrowContract> {
        self.contracts
            .values()
            .find(|c| c.is_open() && &c.asset == asset)
    }

    /// Contracts (any status) that cover the given arc.
    pub fn contracts_on_arc<'a>(
        &'a self,
        arc: &'a ArcId,
    ) -> impl Iterator<Item = &'a EscrowContract> + 'a {
        self.contracts.values().filter(move |c| c.arcs.contains(arc))
    }

    /// True once a contract covering `arc` carries a clause for `scheme`:
    /// the arc counts as escrowed in that scheme.
    pub fn arc_escrowed_in_scheme(&self, arc: &ArcId, scheme: SchemeId) -> bool {
        self.contracts_on_arc(arc)
            .any(|c| c.has_clause_for_scheme(scheme))
    }

    /// Advances the clock one round: deliver due transactions in
    /// deterministic order, expire locks at their deadline, settle.
    pub fn step_round(&mut self, ctx: &LedgerContext, registry: &SignerRegistry) {
        self.round += 1;
        let now = self.round;
        let mut due: Vec<Transaction> = Vec::new();
        let mut rest: Vec<Transaction> = Vec::new();
        for tx in self.queue.drain(..) {
            if tx.visible_round <= now {
                due.push(tx);
            } else {
                rest.push(tx);
            }
        }
        self.queue = rest;
        due.sort_by(|a, b| {
            (a.sender.clone(), a.payload_hash()).cmp(&(b.sender.clone(), b.payload_hash()))
        });
        for tx in due {
            if let Err(err) = self.apply(&tx, ctx, registry) {
                self.trace.push(
                    now,
                    "-",
                    "tx_rejected",
                    None,
                    Some(&tx.sender),
                    json!({ "reason": err.to_string() }),
                );
            }
        }
        self.expire_locks(now);
        self.settle(now);
    }

    fn apply(
        &mut self,
        tx: &Transaction,
        ctx: &LedgerContext,
        registry: &SignerRegistry,
    ) -> Result<(), LedgerError> {
        let now = self.round;
        match &tx.payload {
            TxPayload::Escrow {
                asset,
                arcs,
                clauses,
                deadline,
            } => {
                let state = self
                    .assets
                    .get(asset)
                    .ok_or_else(|| LedgerError::UnknownAsset(asset.clone()))?;
                if state.owner != tx.sender {
                    return Err(LedgerError::NotOwner {
                        party: tx.sender.clone(),
                        asset: asset.clone(),
                    });
                }
                if state.holding != Holding::Owner {
                    return Err(LedgerError::AlreadyEscrowed(asset.clone()));
                }
                let id = ContractId(self.next_contract);
                self.next_contract += 1;
                let ledger = state.ledger.clone();
                let amount = state.amount;
                let mut contract = EscrowContract {
                    id,
                    ledger: ledger.clone(),
                    escrower: tx.sender.clone(),
                    asset: asset.clone(),
                    amount,
                    arcs: arcs.iter().cloned().collect(),
                    clauses: Vec::new(),
                    lock_states: BTreeMap::new(),
                    unlocking_keys: BTreeMap::new(),
                    deadline: *deadline,
                    status: ContractStatus::Open,
                    mode: ctx.mode,
                    created_round: now,
                };
                for clause in clauses {
                    contract.register_clause_atoms(clause);
                    contract.clauses.push(clause.clone());
                }
                self.assets.get_mut(asset).unwrap().holding = Holding::Contract(id);
                self.trace.push(
                    now,
                    ledger.0.clone(),
                    "escrow",
                    Some(id),
                    Some(&tx.sender),
                    json!({
                        "asset": asset.0,
                        "amount": amount,
                        "arcs": arcs.iter().map(|a| a.0.clone()).collect::<Vec<_>>(),
                        "schemes": clauses.iter().map(|c| c.scheme).collect::<Vec<_>>(),
                        "deadline": deadline,
                    }),
                );
                self.contracts.insert(id, contract);
                Ok(())
            }
            TxPayload::ExtendCircuit { contract, clauses } => {
                let c = self
                    .contracts
                    .get_mut(contract)
                    .ok_or(LedgerError::UnknownContract(*contract))?;
                if c.escrower != tx.sender {
                    return Err(LedgerError::NotEscrower {
                        party: tx.sender.clone(),
                        contract: *contract,
                    });
                }
                if !c.is_open() {
                    return Err(LedgerError::ContractClosed(*contract));
                }
                let ledger = c.ledger.0.clone();
                let mut added = Vec::new();
                for clause in clauses {
                    // OR-extension is monotone and idempotent: identical
                    // clauses are not duplicated.
                    if !c.clauses.contains(clause) {
                        c.register_clause_atoms(clause);
                        for arc in [&clause.arc] {
                            c.arcs.insert(arc.clone());
                        }
                        c.clauses.push(clause.clone());
                        added.push(clause.scheme);
                    }
                }
                self.trace.push(
                    now,
                    ledger,
                    "extend_circuit",
                    Some(*contract),
                    Some(&tx.sender),
                    json!({ "schemes": added }),
                );
                Ok(())
            }
            TxPayload::SubmitHashkey { contract, key } => {
                let Some(c) = self.contracts.get(contract) else {
                    return Err(LedgerError::UnknownContract(*contract));
                };
                if !c.is_open() {
                    return Err(LedgerError::ContractClosed(*contract));
                }
                let ledger = c.ledger.0.clone();
                let mode = c.mode;
                // A key may match several lock atoms (same digest cannot
                // collide across generators, so in practice exactly one).
                let digest = Hashlock(sha256(&key.secret));
                let mut unlocked: Vec<Hashlock> = Vec::new();
                let candidate_arcs: Vec<ArcId> = c.arcs.iter().cloned().collect();
                if let Some(state) = c.lock_states.get(&digest) {
                    if *state == LockState::Open {
                        let generator = ctx
                            .generator_of
                            .get(&digest)
                            .map(|(p, _)| p.clone());
                        if let Some(generator) = generator {
                            // Path validity may depend on which covered arc
                            // the key is presented for; accept if any
                            // covered arc validates.
                            let ok = candidate_arcs.iter().any(|arc_id| {
                                ctx.graph.arc(arc_id).is_some_and(|arc| {
                                    verify_hashkey(
                                        &digest, key, arc, &generator, &ctx.verify, registry,
                                        now, mode,
                                    )
                                })
                            });
                            if ok {
                                unlocked.push(digest);
                            }
                        }
                    }
                }
                let c = self.contracts.get_mut(contract).unwrap();
                if unlocked.is_empty() {
                    self.trace.push(
                        now,
                        ledger,
                        "hashkey_rejected",
                        Some(*contract),
                        Some(&tx.sender),
                        json!({
                            "hashlock": digest.short_hex(),
                            "path": key.path.iter().map(|p| p.0.clone()).collect::<Vec<_>>(),
                        }),
                    );
                } else {
                    for h in &unlocked {
                        c.lock_states.insert(*h, LockState::Unlocked(now));
                        c.unlocking_keys.entry(*h).or_insert_with(|| key.clone());
                        self.trace.push(
                            now,
                            ledger.clone(),
                            "lock_unlocked",
                            Some(*contract),
                            Some(&tx.sender),
                            json!({
                                "hashlock": h.short_hex(),
                                "path": key.path.iter().map(|p| p.0.clone()).collect::<Vec<_>>(),
                            }),
                        );
                    }
                }
                Ok(())
            }
            TxPayload::Claim { contract } => {
                // Settlement is automatic at the end of each round; a claim
                // is accepted as a no-op nudge.
                if !self.contracts.contains_key(contract) {
                    return Err(LedgerError::UnknownContract(*contract));
                }
                Ok(())
            }
        }
    }

    fn expire_locks(&mut self, now: Round) {
        let mut events = Vec::new();
        for c in self.contracts.values_mut() {
            if !c.is_open() || now < c.deadline {
                continue;
            }
            for (h, state) in c.lock_states.iter_mut() {
                if *state == LockState::Open {
                    *state = LockState::Expired;
                    events.push((c.ledger.0.clone(), c.id, *h));
                }
            }
        }
        for (ledger, id, h) in events {
            self.trace.push(
                now,
                ledger,
                "lock_expired",
                Some(id),
                None,
                json!({ "hashlock": h.short_hex() }),
            );
        }
    }

    fn settle(&mut self, now: Round) {
        let ids: Vec<ContractId> = self.contracts.keys().copied().collect();
        for id in ids {
            let c = &self.contracts[&id];
            if !c.is_open() {
                continue;
            }
            let mut sorted: Vec<&Clause> = c.clauses.iter().collect();
            sorted.sort_by_key(|cl| cl.priority());
            let mut decision: Option<Clause> = None;
            let mut any_pending = false;
            match c.mode {
                VerifyMode::Undirected => {
                    // ProtocolB: clauses carry levels and possibly different
                    // recipients. Walk in priority order; a pending clause
                    // blocks settlement of lower-priority clauses, which is
                    // the contract-side reading of "wait until timeout".
                    for clause in sorted {
                        match evaluate_circuit(&clause.expr, &c.lock_states)
                            .expect("atoms registered")
                        {
                            Tri::True => {
                                decision = Some(clause.clone());
                                break;
                            }
                            Tri::Pending => {
                                any_pending = true;
                                break;
                            }
                            Tri::False => {}
                        }
                    }
                }
                _ => {
                    // ProtocolA / base: every clause pays the arc's fixed
                    // recipient, so the first true clause (best priority
                    // among true ones) triggers immediately.
                    for clause in &sorted {
                        match evaluate_circuit(&clause.expr, &c.lock_states)
                            .expect("atoms registered")
                        {
                            Tri::True => {
                                decision = Some((*clause).clone());
                                break;
                            }
                            Tri::Pending => any_pending = true,
                            Tri::False => {}
                        }
                    }
                }
            }
            if let Some(clause) = decision {
                let c = self.contracts.get_mut(&id).unwrap();
                let level = clause.rank;
                c.status = ContractStatus::Triggered {
                    scheme: clause.scheme,
                    solution: clause.solution,
                    arc: clause.arc.clone(),
                    recipient: clause.recipient.clone(),
                    round: now,
                    level,
                };
                let ledger = c.ledger.0.clone();
                let asset = c.asset.clone();
                let amount = c.amount;
                self.assets.get_mut(&asset).unwrap().holding =
                    Holding::Recipient(clause.recipient.clone());
                self.trace.push(
                    now,
                    ledger,
                    "triggered",
                    Some(id),
                    Some(&clause.recipient),
                    json!({
                        "asset": asset.0,
                        "amount": amount,
                        "arc": clause.arc.0,
                        "scheme": clause.scheme,
                        "solution": clause.solution,
                        "level": level,
                    }),
                );
            } else if !any_pending {
                // Every clause is definitively false (each blocked by an
                // expired atom): the circuit can never become true. Refund.
                // A contract created with clauses but before any deadline
                // only reaches this arm once locks actually expired.
                let c = self.contracts.get_mut(&id).unwrap();
                if c.clauses.is_empty() && now < c.deadline {
                    continue;
                }
                c.status = ContractStatus::Refunded { round: now };
                let ledger = c.ledger.0.clone();
                let asset = c.asset.clone();
                let escrower = c.escrower.clone();
                let amount = c.amount;
                self.assets.get_mut(&asset).unwrap().holding = Holding::Owner;
                self.trace.push(
                    now,
                    ledger,
                    "refunded",
                    Some(id),
                    Some(&escrower),
                    json!({ "asset": asset.0, "amount": amount }),
                );
            }
        }
    }
}

/// Per-run immutable context the ledger needs to verify keys and settle.
#[derive(Debug, Clone)]
pub struct LedgerContext {
    pub verify: VerifyContext,
    pub generator_of: BTreeMap<Hashlock, (PartyId, SolutionId)>,
    pub mode: VerifyMode,
}

impl std::ops::Deref for LedgerContext {
    type Target = VerifyContext;
    fn deref(&self) -> &VerifyContext {
        &self.verify
    }
}
