//! Protocol drivers: per-party state machines for the base swap, ProtocolA
//! and ProtocolB, plus adversary behaviors and the post-run auditor.
//!
//! Parties are isolated actors stepped between ledger rounds. They observe
//! the public ledger state (one round stale, per the synchrony bound) and
//! communicate only through ledger transactions and the explicit off-chain
//! select-phase messages. The whole engine is deterministic given the
//! scenario and seed.

pub mod audit;
pub mod metrics;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::clearing::{
    maximal_compatible_set, ClearingMode, ClearingPlan, CompiledSpec, SchemeId, SchemePlan,
    SolutionId,
};
use crate::crypto::{
    extend_hashkey, leader_hashkey, make_hashlock, Hashkey, Hashlock, LockState, Round, Secret,
    SignerRegistry, VerifyContext, VerifyMode,
};
use crate::graph::{ArcId, AssetId, Digraph, PartyId};
use crate::ledger::{
    AssetState, Clause, ContractId, ContractStatus, LedgerContext, LedgerId, TxPayload, World,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    Base,
    A,
    B,
}

impl Protocol {
    pub fn clearing_mode(&self) -> ClearingMode {
        match self {
            Protocol::B => ClearingMode::ProtocolB,
            _ => ClearingMode::ProtocolA,
        }
    }

    pub fn default_verify_mode(&self) -> VerifyMode {
        match self {
            Protocol::B => VerifyMode::Undirected,
            _ => VerifyMode::Directed,
        }
    }
}

/// Which schemes a withholding behavior targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeSelector {
    All,
    Solutions(BTreeSet<SolutionId>),
    Schemes(BTreeSet<SchemeId>),
}

impl SchemeSelector {
    fn matches_scheme(&self, scheme: &SchemePlan) -> bool {
        match self {
            SchemeSelector::All => true,
            SchemeSelector::Solutions(s) => s.contains(&scheme.solution),
            SchemeSelector::Schemes(s) => s.contains(&scheme.id),
        }
    }

    fn matches_solution(&self, solution: SolutionId, plan: &ClearingPlan) -> bool {
        match self {
            SchemeSelector::All => true,
            SchemeSelector::Solutions(s) => s.contains(&solution),
            SchemeSelector::Schemes(ids) => ids
                .iter()
                .any(|id| plan.schemes.get(*id).is_some_and(|p| p.solution == solution)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Escrow,
    Select,
    Redeem,
}

/// Byzantine repertoire. A behavior is fixed per party per run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    Conforming,
    /// Stop acting entirely from the given offset within the phase.
    CrashAt { phase: Phase, round: Round },
    WithholdEscrow { schemes: SchemeSelector },
    WithholdHashkey { schemes: SchemeSelector },
    /// Hand all own leader keys to another party off-chain at the given
    /// round and never release or relay on-chain (a colluding generator).
    LeakSecretTo { party: PartyId, round: Round },
    /// Extend any visible or leaked key with own signature and spray the
    /// result at every open contract (the shortcut attack).
    ForgeShortcutKeys,
}

impl Behavior {
    pub fn is_conforming(&self) -> bool {
        matches!(self, Behavior::Conforming)
    }
}

/// Everything a protocol run needs, assembled by the scenario loader.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub graph: Digraph,
    pub assets: Vec<AssetState>,
    pub ledgers: Vec<LedgerId>,
    pub specs: Vec<CompiledSpec>,
    pub plan: ClearingPlan,
    pub protocol: Protocol,
    pub mode: VerifyMode,
    pub behaviors: BTreeMap<PartyId, Behavior>,
    pub registry: SignerRegistry,
    /// Extra rounds added to the contract deadline (upward override only).
    pub deadline_extension: Round,
}

/// Outcome of one simulated run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub world: World,
    pub infeasible: bool,
    pub committed: BTreeSet<SchemeId>,
    /// Rounds [0, escrow_end) belong to the escrow phase.
    pub escrow_end: Round,
    pub lock_deadline: Round,
}

impl RunResult {
    /// Round of the last triggered transfer, if any completed.
    pub fn completion_round(&self) -> Option<Round> {
        self.world
            .trace
            .events
            .iter()
            .filter(|e| e.kind == "triggered")
            .map(|e| e.round)
            .max()
    }

    pub fn triggered_arcs(&self) -> BTreeSet<ArcId> {
        self.world
            .contracts
            .values()
            .filter_map(|c| match &c.status {
                ContractStatus::Triggered { arc, .. } => Some(arc.clone()),
                _ => None,
            })
            .collect()
    }
}

struct PartyRt {
    behavior: Behavior,
    secrets: BTreeMap<SolutionId, Secret>,
    released: BTreeSet<SolutionId>,
    /// (asset, scheme) escrow/extension submissions already made.
    escrow_submitted: BTreeSet<(AssetId, SchemeId)>,
    /// Assets whose initial escrow is in flight (contract not yet visible).
    escrow_in_flight: BTreeSet<AssetId>,
    /// Hashkey submissions already made: (contract, digest, path).
    key_submissions: BTreeSet<(ContractId, Hashlock, Vec<PartyId>)>,
    /// Off-chain received keys (leaks).
    stash: Vec<Hashkey>,
    leaked: bool,
}

impl PartyRt {
    fn crash_round(&self, escrow_end: Round) -> Option<Round> {
        match &self.behavior {
            Behavior::CrashAt { phase, round } => {
                let start = match phase {
                    Phase::Escrow => 0,
                    Phase::Select | Phase::Redeem => escrow_end,
                };
                Some(start + round)
            }
            _ => None,
        }
    }
}

pub struct Simulation {
    pub setup: SimSetup,
    pub world: World,
    ctx: LedgerContext,
    parties: BTreeMap<PartyId, PartyRt>,
    committed: BTreeSet<SchemeId>,
    escrow_end: Round,
    lock_deadline: Round,
    /// Schemes known to be committed-rejected (conflict with committed).
    excluded: BTreeSet<SchemeId>,
}

impl Simulation {
    pub fn new(setup: SimSetup) -> Self {
        let verify = VerifyContext::new(&setup.graph);
        let lock_deadline = verify.lock_deadline(setup.mode) + setup.deadline_extension;
        let escrow_end = verify.max_path_len as Round * verify.delta;
        let ctx = LedgerContext {
            verify,
            generator_of: setup.plan.generator_of.clone(),
            mode: setup.mode,
        };
        let world = World::new(setup.ledgers.clone(), setup.assets.clone());
        let mut parties = BTreeMap::new();
        for v in setup.graph.vertices() {
            let behavior = setup
                .behaviors
                .get(v)
                .cloned()
                .unwrap_or(Behavior::Conforming);
            let secrets: BTreeMap<SolutionId, Secret> = setup
                .plan
                .secrets
                .iter()
                .filter(|((p, _), _)| p == v)
                .map(|((_, sol), s)| (*sol, s.clone()))
                .collect();
            parties.insert(
                v.clone(),
                PartyRt {
                    behavior,
                    secrets,
                    released: BTreeSet::new(),
                    escrow_submitted: BTreeSet::new(),
                    escrow_in_flight: BTreeSet::new(),
                    key_submissions: BTreeSet::new(),
                    stash: Vec::new(),
                    leaked: false,
                },
            );
        }
        Simulation {
            setup,
            world,
            ctx,
            parties,
            committed: BTreeSet::new(),
            escrow_end,
            lock_deadline,
            excluded: BTreeSet::new(),
        }
    }

    /// Runs the protocol to quiescence and returns the result.
    pub fn run(mut self) -> RunResult {
        let infeasible = self.setup.plan.solutions.is_empty();
        if infeasible {
            self.world.trace.push(
                0,
                "offchain",
                "infeasible",
                None,
                None,
                json!({ "reason": "no non-trivial strongly-connected solution" }),
            );
            return RunResult {
                world: self.world,
                infeasible: true,
                committed: BTreeSet::new(),
                escrow_end: self.escrow_end,
                lock_deadline: self.lock_deadline,
            };
        }
        match self.setup.protocol {
            Protocol::Base | Protocol::A | Protocol::B => self.drive(),
        }
        RunResult {
            world: self.world,
            infeasible: false,
            committed: self.committed,
            escrow_end: self.escrow_end,
            lock_deadline: self.lock_deadline,
        }
    }

    fn drive(&mut self) {
        // Base protocol: its single scheme is committed from the start.
        if self.setup.protocol == Protocol::Base {
            self.committed = self.setup.plan.schemes.iter().map(|s| s.id).collect();
        }
        let cap = self.lock_deadline + 8;
        loop {
            if self.setup.protocol == Protocol::A {
                self.commit_step();
            }
            let submitted = self.party_actions();
            let quiescent = submitted == 0 && !self.world.has_pending();
            if quiescent && self.world.all_settled() {
                break;
            }
            self.world.step_round(&self.ctx, &self.setup.registry);
            if self.world.round > cap {
                break;
            }
        }
    }

    /// Deterministic shared-program select step (ProtocolA): commit every
    /// escrow-complete scheme that does not conflict with the committed set,
    /// in scheme-id order, with the proposer/voter exchange recorded
    /// off-chain.
    fn commit_step(&mut self) {
        let now = self.world.round;
        let mut candidates: BTreeSet<SchemeId> = BTreeSet::new();
        for scheme in &self.setup.plan.schemes {
            if self.committed.contains(&scheme.id) || self.excluded.contains(&scheme.id) {
                continue;
            }
            if self.scheme_escrow_complete(scheme) {
                candidates.insert(scheme.id);
            }
        }
        if candidates.is_empty() {
            return;
        }
        // Greedy over committed + candidates, seeded with the committed set.
        let mut all: BTreeSet<SchemeId> = self.committed.clone();
        all.extend(candidates.iter().copied());
        let selected = maximal_compatible_set(
            &self.setup.plan.schemes,
            &self.setup.specs,
            &self.setup.plan.solutions,
            &self.setup.graph,
            &all,
            self.setup.protocol.clearing_mode(),
        );
        let proposer = self.select_proposer();
        for id in candidates {
            if selected.contains(&id) {
                self.world.trace.push(
                    now,
                    "offchain",
                    "select_commit",
                    None,
                    proposer.as_ref(),
                    json!({ "scheme": id, "solution": self.setup.plan.schemes[id].solution }),
                );
                self.emit_votes(id, now);
                self.committed.insert(id);
            } else {
                self.world.trace.push(
                    now,
                    "offchain",
                    "select_reject",
                    None,
                    proposer.as_ref(),
                    json!({ "scheme": id, "reason": "conflicts with committed set" }),
                );
                self.excluded.insert(id);
            }
        }
    }

    fn select_proposer(&self) -> Option<PartyId> {
        self.setup
            .plan
            .redundancy_providers
            .iter()
            .next()
            .cloned()
            .or_else(|| self.setup.graph.vertices().next().cloned())
    }

    fn emit_votes(&mut self, scheme: SchemeId, now: Round) {
        let voters: Vec<PartyId> = self
            .setup
            .plan
            .redundancy_providers
            .iter()
            .cloned()
            .collect();
        for v in voters {
            let crashed = self
                .parties
                .get(&v)
                .and_then(|p| p.crash_round(self.escrow_end))
                .is_some_and(|r| now >= r);
            if crashed {
                continue;
            }
            self.world.trace.push(
                now,
                "offchain",
                "select_vote",
                None,
                Some(&v),
                json!({ "scheme": scheme, "vote": "yes" }),
            );
        }
    }

    fn scheme_escrow_complete(&self, scheme: &SchemePlan) -> bool {
        scheme
            .graph
            .arcs()
            .all(|a| self.world.arc_escrowed_in_scheme(&a.id, scheme.id))
    }

    /// One decision pass for every party, in id order. Returns the number of
    /// submissions (transactions or off-chain messages).
    fn party_actions(&mut self) -> usize {
        let ids: Vec<PartyId> = self.parties.keys().cloned().collect();
        let mut submitted = 0;
        for id in ids {
            submitted += self.act(&id);
        }
        submitted
    }

    fn act(&mut self, id: &PartyId) -> usize {
        let now = self.world.round;
        let rt = &self.parties[id];
        if let Some(r) = rt.crash_round(self.escrow_end) {
            if now >= r {
                return 0;
            }
        }
        let behavior = rt.behavior.clone();
        let mut n = 0;
        match behavior {
            Behavior::LeakSecretTo { party, round } => {
                n += self.escrow_duties(id, None);
                if now >= round && !self.parties[id].leaked {
                    n += self.leak(id, &party);
                }
                // A leaking generator stays silent on-chain afterwards.
            }
            Behavior::ForgeShortcutKeys => {
                n += self.escrow_duties(id, None);
                n += self.forge(id);
            }
            Behavior::WithholdEscrow { schemes } => {
                n += self.escrow_duties(id, Some(&schemes));
                n += self.redeem_duties(id, None);
                n += self.relay_duties(id);
            }
            Behavior::WithholdHashkey { schemes } => {
                n += self.escrow_duties(id, None);
                n += self.redeem_duties(id, Some(&schemes));
                n += self.relay_duties(id);
            }
            Behavior::Conforming | Behavior::CrashAt { .. } => {
                n += self.escrow_duties(id, None);
                n += self.redeem_duties(id, None);
                n += self.relay_duties(id);
            }
        }
        n
    }

    /// Escrow state machine: leaders (FVS of the scheme graph) escrow first;
    /// everyone else escrows a scheme's outgoing arcs once all its incoming
    /// arcs are escrowed in that scheme. First escrow of an asset creates
    /// the contract; later schemes extend the circuit with an OR clause.
    fn escrow_duties(&mut self, id: &PartyId, withhold: Option<&SchemeSelector>) -> usize {
        let mut n = 0;
        let schemes: Vec<SchemeId> = self.setup.plan.schemes.iter().map(|s| s.id).collect();
        for sid in schemes {
            let scheme = &self.setup.plan.schemes[sid];
            if !scheme.graph.contains_vertex(id) {
                continue;
            }
            if withhold.is_some_and(|w| w.matches_scheme(scheme)) {
                continue;
            }
            let outgoing: Vec<(ArcId, AssetId)> = scheme
                .graph
                .outgoing(id)
                .map(|a| (a.id.clone(), a.asset.clone()))
                .collect();
            if outgoing.is_empty() {
                continue;
            }
            let is_leader = scheme.escrow_leaders.contains(id);
            let incoming_ready = scheme
                .graph
                .incoming(id)
                .all(|a| self.world.arc_escrowed_in_scheme(&a.id, sid));
            if !is_leader && !incoming_ready {
                continue;
            }
            for (arc, asset) in outgoing {
                n += self.ensure_escrowed(id, sid, &arc, &asset);
            }
        }
        n
    }

    fn clause_for(&self, scheme: &SchemePlan, arc: &ArcId) -> Clause {
        let expr = scheme
            .circuit_b
            .clone()
            .unwrap_or_else(|| scheme.circuit.clone());
        let recipient = self
            .setup
            .graph
            .arc(arc)
            .expect("scheme arc exists")
            .to
            .clone();
        Clause {
            scheme: scheme.id,
            solution: scheme.solution,
            rank: scheme.rank,
            arc: arc.clone(),
            recipient,
            expr,
        }
    }

    fn ensure_escrowed(&mut self, id: &PartyId, sid: SchemeId, arc: &ArcId, asset: &AssetId) -> usize {
        if self.parties[id]
            .escrow_submitted
            .contains(&(asset.clone(), sid))
        {
            return 0;
        }
        let scheme = &self.setup.plan.schemes[sid];
        let clause = self.clause_for(scheme, arc);
        let existing = self
            .world
            .contract_for_asset(asset)
            .map(|c| (c.id, c.escrower.clone(), c.has_clause_for_scheme(sid)));
        if let Some((contract_id, escrower, has_clause)) = existing {
            if &escrower != id {
                return 0;
            }
            if has_clause {
                let rt = self.parties.get_mut(id).unwrap();
                rt.escrow_submitted.insert((asset.clone(), sid));
                rt.escrow_in_flight.remove(asset);
                return 0;
            }
            self.world.submit(
                id.clone(),
                TxPayload::ExtendCircuit {
                    contract: contract_id,
                    clauses: vec![clause],
                },
            );
            let rt = self.parties.get_mut(id).unwrap();
            rt.escrow_submitted.insert((asset.clone(), sid));
            rt.escrow_in_flight.remove(asset);
            1
        } else {
            // Wait while the initial escrow is in flight; extend next round.
            if self.parties[id].escrow_in_flight.contains(asset) {
                return 0;
            }
            self.world.submit(
                id.clone(),
                TxPayload::Escrow {
                    asset: asset.clone(),
                    arcs: vec![arc.clone()],
                    clauses: vec![clause],
                    deadline: self.lock_deadline,
                },
            );
            let rt = self.parties.get_mut(id).unwrap();
            rt.escrow_submitted.insert((asset.clone(), sid));
            rt.escrow_in_flight.insert(asset.clone());
            1
        }
    }

    /// Release rule for generators: a hashlock is released only when, in
    /// every scheme that carries it, all of the generator's incoming arcs
    /// are escrowed for that scheme; in ProtocolA additionally only once
    /// some scheme using it is committed.
    fn redeem_duties(&mut self, id: &PartyId, withhold: Option<&SchemeSelector>) -> usize {
        let mut n = 0;
        let solutions: Vec<SolutionId> = self.parties[id].secrets.keys().copied().collect();
        for sol in solutions {
            if self.parties[id].released.contains(&sol) {
                continue;
            }
            if withhold.is_some_and(|w| w.matches_solution(sol, &self.setup.plan)) {
                continue;
            }
            let lock = make_hashlock(&self.parties[id].secrets[&sol]);
            let using: Vec<SchemeId> = self
                .setup
                .plan
                .schemes_using(&lock)
                .iter()
                .map(|s| s.id)
                .collect();
            if using.is_empty() {
                continue;
            }
            if self.setup.protocol == Protocol::A
                && !using.iter().any(|s| self.committed.contains(s))
            {
                continue;
            }
            let all_incoming_ready = using.iter().all(|&sid| {
                let scheme = &self.setup.plan.schemes[sid];
                scheme
                    .graph
                    .incoming(id)
                    .all(|a| self.world.arc_escrowed_in_scheme(&a.id, sid))
            });
            if !all_incoming_ready {
                continue;
            }
            let secret = self.parties[id].secrets[&sol].clone();
            let key = leader_hashkey(&secret, id, &self.setup.registry)
                .expect("party key registered");
            let mut targets: BTreeSet<ContractId> = BTreeSet::new();
            match self.setup.mode {
                VerifyMode::Undirected => {
                    // Broadcast release: the base key goes to every open
                    // contract on an arc incident to the generator that
                    // still carries the lock, including contracts that only
                    // reference it through a negation.
                    for c in self.world.contracts.values() {
                        if c.is_open()
                            && c.lock_states.get(&lock) == Some(&LockState::Open)
                            && c.arcs.iter().any(|a| {
                                self.setup
                                    .graph
                                    .arc(a)
                                    .is_some_and(|ar| &ar.from == id || &ar.to == id)
                            })
                        {
                            targets.insert(c.id);
                        }
                    }
                }
                _ => {
                    // Directed/pathless: unlock the generator's incoming
                    // arcs in every scheme using this hashlock.
                    for &sid in &using {
                        let scheme = &self.setup.plan.schemes[sid];
                        for a in scheme.graph.incoming(id) {
                            for c in self.world.contracts_on_arc(&a.id) {
                                if c.is_open()
                                    && c.lock_states.get(&lock) == Some(&LockState::Open)
                                {
                                    targets.insert(c.id);
                                }
                            }
                        }
                    }
                }
            }
            if targets.is_empty() {
                continue;
            }
            for t in targets {
                n += self.submit_key(id, t, &key, lock);
            }
            self.parties.get_mut(id).unwrap().released.insert(sol);
        }
        n
    }

    fn submit_key(&mut self, id: &PartyId, contract: ContractId, key: &Hashkey, lock: Hashlock) -> usize {
        let entry = (contract, lock, key.path.clone());
        let rt = self.parties.get_mut(id).unwrap();
        if !rt.key_submissions.insert(entry) {
            return 0;
        }
        self.world.submit(
            id.clone(),
            TxPayload::SubmitHashkey {
                contract,
                key: key.clone(),
            },
        );
        1
    }

    /// Propagation: once a key is visible on an arc the party is entitled to
    /// relay from (its outgoing arc in directed mode, any incident arc in
    /// undirected mode, anywhere in pathless mode), extend it with own
    /// signature and send it to the contracts it may redeem with.
    fn relay_duties(&mut self, id: &PartyId) -> usize {
        let mode = self.setup.mode;
        let mut sources: Vec<(Hashlock, Hashkey)> = Vec::new();
        for c in self.world.contracts.values() {
            for (h, key) in &c.unlocking_keys {
                let entitled = match mode {
                    VerifyMode::Directed => c
                        .arcs
                        .iter()
                        .any(|a| self.setup.graph.arc(a).is_some_and(|ar| &ar.from == id)),
                    VerifyMode::Undirected => c.arcs.iter().any(|a| {
                        self.setup
                            .graph
                            .arc(a)
                            .is_some_and(|ar| &ar.from == id || &ar.to == id)
                    }),
                    VerifyMode::Pathless => true,
                };
                // An extension [self, head, ...] only verifies when self is
                // adjacent to the key's head (in the undirected view for
                // ProtocolB, via the arc itself in directed mode).
                let extendable = match mode {
                    VerifyMode::Pathless => true,
                    _ => key
                        .path
                        .first()
                        .is_some_and(|head| self.setup.graph.adjacent(id, head)),
                };
                if entitled && extendable && !key.path.contains(id) {
                    sources.push((*h, key.clone()));
                }
            }
        }
        for key in self.parties[id].stash.clone() {
            if !key.path.contains(id) {
                sources.push((Hashlock(crate::crypto::sha256(&key.secret)), key));
            }
        }
        let mut n = 0;
        for (lock, key) in sources {
            let Ok(extended) = extend_hashkey(&key, id, &self.setup.registry) else {
                continue;
            };
            let targets = self.relay_targets(id, lock, mode);
            for t in targets {
                n += self.submit_key(id, t, &extended, lock);
            }
        }
        n
    }

    fn relay_targets(&self, id: &PartyId, lock: Hashlock, mode: VerifyMode) -> Vec<ContractId> {
        self.world
            .contracts
            .values()
            .filter(|c| c.is_open() && c.lock_states.get(&lock) == Some(&LockState::Open))
            .filter(|c| {
                c.arcs.iter().any(|a| {
                    self.setup.graph.arc(a).is_some_and(|ar| match mode {
                        VerifyMode::Directed | VerifyMode::Pathless => &ar.to == id,
                        VerifyMode::Undirected => &ar.to == id || &ar.from == id,
                    })
                })
            })
            .map(|c| c.id)
            .collect()
    }

    /// Off-chain collusion: hand every own leader key to the target.
    fn leak(&mut self, id: &PartyId, target: &PartyId) -> usize {
        let now = self.world.round;
        let secrets: Vec<Secret> = self.parties[id].secrets.values().cloned().collect();
        let mut keys = Vec::new();
        for s in &secrets {
            if let Ok(k) = leader_hashkey(s, id, &self.setup.registry) {
                keys.push(k);
            }
        }
        let count = keys.len();
        if let Some(rt) = self.parties.get_mut(target) {
            rt.stash.extend(keys);
        }
        let rt = self.parties.get_mut(id).unwrap();
        rt.leaked = true;
        self.world.trace.push(
            now,
            "offchain",
            "leak",
            None,
            Some(id),
            json!({ "to": target.0, "keys": count }),
        );
        count
    }

    /// The shortcut attack: extend anything in sight and spray it at every
    /// open contract holding a matching lock.
    fn forge(&mut self, id: &PartyId) -> usize {
        let mut sources: Vec<Hashkey> = self.parties[id].stash.clone();
        for c in self.world.contracts.values() {
            for key in c.unlocking_keys.values() {
                sources.push(key.clone());
            }
        }
        let mut n = 0;
        for key in sources {
            if key.path.contains(id) {
                continue;
            }
            let Ok(extended) = extend_hashkey(&key, id, &self.setup.registry) else {
                continue;
            };
            let lock = Hashlock(crate::crypto::sha256(&extended.secret));
            let targets: Vec<ContractId> = self
                .world
                .contracts
                .values()
                .filter(|c| c.is_open() && c.lock_states.get(&lock) == Some(&LockState::Open))
                .map(|c| c.id)
                .collect();
            for t in targets {
                n += self.submit_key(id, t, &extended, lock);
            }
        }
        n
    }
}

/// Runs the base swap protocol on a graph: one all-arcs scheme whose
/// hashlock generators are the FVS leaders plus the given redundancy
/// providers.
pub fn base_swap_setup(
    graph: &Digraph,
    assets: Vec<AssetState>,
    ledgers: Vec<LedgerId>,
    specs: Vec<CompiledSpec>,
    extra_generators: &BTreeSet<PartyId>,
    behaviors: BTreeMap<PartyId, Behavior>,
    registry: SignerRegistry,
    mode: VerifyMode,
    rng: &mut dyn rand_chacha::rand_core::RngCore,
) -> SimSetup {
    use crate::clearing::{build_solution_dag, enumerate_paths, Solution};

    let assignment: BTreeMap<ArcId, bool> =
        graph.arc_ids().map(|a| (a.clone(), true)).collect();
    let solutions = vec![Solution { id: 0, assignment }];
    let dag = build_solution_dag(solutions.clone(), graph);
    let paths = enumerate_paths(&dag);
    let mut rps: BTreeSet<PartyId> = extra_generators.clone();
    rps.retain(|p| graph.contains_vertex(p));
    let (schemes, generator_of, secrets) =
        crate::clearing::assign_hashlocks(&dag, &paths, &rps, graph, rng);
    let dag_edges = dag.edges.clone();
    let plan = ClearingPlan {
        solutions,
        dag_edges,
        paths,
        redundancy_providers: rps,
        schemes,
        generator_of,
        secrets,
        preference: None,
        conflicts: BTreeSet::new(),
    };
    SimSetup {
        graph: graph.clone(),
        assets,
        ledgers,
        specs,
        plan,
        protocol: Protocol::Base,
        mode,
        behaviors,
        registry,
        deadline_extension: 0,
    }
}
