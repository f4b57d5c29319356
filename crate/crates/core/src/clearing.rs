//! Market clearing: solution enumeration, the inclusion DAG, redundancy
//! providers, hashlock assignment with reuse, and scheme circuits for both
//! protocols.
//!
//! Enumeration is all-SAT via blocking clauses over the arc variables (the
//! Tseytin auxiliaries are projected out by construction: blocking clauses
//! mention arc literals only). The trivial all-false assignment and
//! assignments whose true-arc subgraph is not strongly connected are blocked
//! without being reported.

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::rand_core::RngCore;
use serde::Serialize;
use thiserror::Error;

use crate::cnf::to_cnf_over;
use crate::crypto::{make_hashlock, CircuitExpr, Hashlock, Secret};
use crate::graph::{ArcId, Digraph, PartyId};
use crate::predicate::{evaluate, PredicateExpr};
use crate::sat::solve;

pub type SolutionId = usize;
pub type SchemeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClearingError {
    #[error("ranking must be a permutation of solution ids 0..{expected}, got {got:?}")]
    RankingNotPermutation { expected: usize, got: Vec<usize> },
    #[error("cannot build a preference order before solutions are enumerated")]
    NoSolutions,
}

/// A satisfying, non-trivial, strongly-connected arc assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub id: SolutionId,
    pub assignment: BTreeMap<ArcId, bool>,
}

impl Solution {
    pub fn true_arcs(&self) -> BTreeSet<ArcId> {
        self.assignment
            .iter()
            .filter(|(_, v)| **v)
            .map(|(k, _)| k.clone())
            .collect()
    }
}

/// Protocol selector where clearing behavior differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClearingMode {
    ProtocolA,
    ProtocolB,
}

/// Per-party compiled predicates the clearing stage evaluates.
#[derive(Debug, Clone)]
pub struct CompiledSpec {
    pub party: PartyId,
    pub safety: PredicateExpr,
    pub liveness: PredicateExpr,
    /// r_x; constant true outside ProtocolB.
    pub reuse: PredicateExpr,
}

impl CompiledSpec {
    /// The predicate market clearing satisfies: S_x, with r_x conjoined in
    /// ProtocolB.
    pub fn clearing_predicate(&self, mode: ClearingMode) -> PredicateExpr {
        match mode {
            ClearingMode::ProtocolA => self.safety.clone(),
            ClearingMode::ProtocolB => PredicateExpr::and(vec![
                self.safety.clone(),
                self.reuse.clone(),
            ]),
        }
    }
}

/// Enumerates distinct satisfying arc assignments of `phi` in deterministic
/// (lexicographic, false-first) order, excluding the all-false assignment
/// and assignments whose subgraph is not strongly connected. Stops after
/// `limit` accepted solutions.
pub fn enumerate_solutions(phi: &PredicateExpr, g: &Digraph, limit: usize) -> Vec<Solution> {
    assert!(limit >= 1, "solution limit must be at least 1");
    let universe: Vec<ArcId> = g.arc_ids().cloned().collect();
    let cnf = to_cnf_over(phi, &universe);
    let arc_vars: Vec<i32> = universe.iter().map(|a| cnf.var_map[a]).collect();
    let mut formula = cnf.formula;
    let mut found = Vec::new();
    loop {
        let Some(model) = solve(&formula, &arc_vars) else {
            break;
        };
        let assignment: BTreeMap<ArcId, bool> = universe
            .iter()
            .map(|a| (a.clone(), model[(cnf.var_map[a] - 1) as usize]))
            .collect();
        // Block this arc assignment regardless of acceptance.
        let blocking: Vec<i32> = universe
            .iter()
            .map(|a| {
                let v = cnf.var_map[a];
                if assignment[a] {
                    -v
                } else {
                    v
                }
            })
            .collect();
        formula.add_clause(blocking);
        let nontrivial = assignment.values().any(|v| *v);
        if nontrivial && g.solution_subgraph(&assignment).is_strongly_connected() {
            found.push(Solution {
                id: found.len(),
                assignment,
            });
            if found.len() >= limit {
                break;
            }
        }
    }
    found
}

/// Inclusion DAG after transitive reduction: an edge (s, s') means the
/// true-arc set of s is a strict subset of s' with no solution strictly in
/// between.
#[derive(Debug, Clone)]
pub struct SolutionDag {
    pub solutions: Vec<Solution>,
    /// Transitively reduced edges (parent, child).
    pub edges: BTreeSet<(SolutionId, SolutionId)>,
    /// Full inclusion relation, kept for reachability checks.
    inclusion: BTreeSet<(SolutionId, SolutionId)>,
}

impl SolutionDag {
    pub fn roots(&self) -> Vec<SolutionId> {
        (0..self.solutions.len())
            .filter(|s| !self.edges.iter().any(|(_, c)| c == s))
            .collect()
    }

    pub fn leaves(&self) -> Vec<SolutionId> {
        (0..self.solutions.len())
            .filter(|s| !self.edges.iter().any(|(p, _)| p == s))
            .collect()
    }

    pub fn children(&self, s: SolutionId) -> Vec<SolutionId> {
        self.edges
            .iter()
            .filter(|(p, _)| *p == s)
            .map(|(_, c)| *c)
            .collect()
    }

    /// Reachability in the reduced DAG; equals inclusion by construction.
    pub fn reaches(&self, from: SolutionId, to: SolutionId) -> bool {
        if from == to {
            return false;
        }
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            for c in self.children(v) {
                if c == to {
                    return true;
                }
                stack.push(c);
            }
        }
        false
    }

    pub fn includes(&self, a: SolutionId, b: SolutionId) -> bool {
        self.inclusion.contains(&(a, b))
    }
}

/// Builds the inclusion DAG. s is included in s' iff the vertex set is a
/// subset and the arc set a strict subset; redundant edges are removed.
pub fn build_solution_dag(solutions: Vec<Solution>, g: &Digraph) -> SolutionDag {
    let arc_sets: Vec<BTreeSet<ArcId>> = solutions.iter().map(|s| s.true_arcs()).collect();
    let vertex_sets: Vec<BTreeSet<PartyId>> = solutions
        .iter()
        .map(|s| {
            g.solution_subgraph(&s.assignment)
                .vertex_set()
                .clone()
        })
        .collect();
    let n = solutions.len();
    let mut inclusion = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i != j
                && vertex_sets[i].is_subset(&vertex_sets[j])
                && arc_sets[i].is_subset(&arc_sets[j])
                && arc_sets[i] != arc_sets[j]
            {
                inclusion.insert((i, j));
            }
        }
    }
    let mut edges = inclusion.clone();
    for &(i, j) in &inclusion {
        for k in 0..n {
            if inclusion.contains(&(i, k)) && inclusion.contains(&(k, j)) {
                edges.remove(&(i, j));
                break;
            }
        }
    }
    SolutionDag {
        solutions,
        edges,
        inclusion,
    }
}

/// One root-to-leaf path in the DAG (or an isolated root).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagPath {
    pub id: usize,
    pub nodes: Vec<SolutionId>,
}

/// All paths from every root to every reachable leaf, in deterministic
/// order; a root that is also a leaf contributes its trivial path.
pub fn enumerate_paths(dag: &SolutionDag) -> Vec<DagPath> {
    let mut out = Vec::new();
    for root in dag.roots() {
        let mut stack = vec![root];
        collect_paths(dag, &mut stack, &mut out);
    }
    out
}

fn collect_paths(dag: &SolutionDag, stack: &mut Vec<SolutionId>, out: &mut Vec<DagPath>) {
    let last = *stack.last().unwrap();
    let children = dag.children(last);
    if children.is_empty() {
        out.push(DagPath {
            id: out.len(),
            nodes: stack.clone(),
        });
        return;
    }
    for c in children {
        stack.push(c);
        collect_paths(dag, stack, out);
        stack.pop();
    }
}

/// Assignment with every arc of the given solutions' union set true and all
/// other scenario arcs false.
pub fn union_assignment(
    g: &Digraph,
    arc_sets: impl IntoIterator<Item = BTreeSet<ArcId>>,
) -> BTreeMap<ArcId, bool> {
    let mut union: BTreeSet<ArcId> = BTreeSet::new();
    for s in arc_sets {
        union.extend(s);
    }
    g.arc_ids()
        .map(|a| (a.clone(), union.contains(a)))
        .collect()
}

/// Parties sitting in two solutions whose joint completion would falsify
/// their predicate. In ProtocolB the joint completion must additionally not
/// violate r_x (otherwise completing both is impossible and the party
/// provides no redundant collateral).
pub fn find_redundancy_providers(
    specs: &[CompiledSpec],
    solutions: &[Solution],
    g: &Digraph,
    mode: ClearingMode,
) -> BTreeSet<PartyId> {
    let mut out = BTreeSet::new();
    let subgraphs: Vec<Digraph> = solutions
        .iter()
        .map(|s| g.solution_subgraph(&s.assignment))
        .collect();
    for spec in specs {
        'pairs: for i in 0..solutions.len() {
            if !subgraphs[i].contains_vertex(&spec.party) {
                continue;
            }
            for j in (i + 1)..solutions.len() {
                if !subgraphs[j].contains_vertex(&spec.party) {
                    continue;
                }
                let union = union_assignment(
                    g,
                    [solutions[i].true_arcs(), solutions[j].true_arcs()],
                );
                let safety_broken = !evaluate(&spec.safety, &union).expect("total assignment");
                let reuse_ok = evaluate(&spec.reuse, &union).expect("total assignment");
                let is_rp = match mode {
                    ClearingMode::ProtocolA => safety_broken,
                    ClearingMode::ProtocolB => safety_broken && reuse_ok,
                };
                if is_rp {
                    out.insert(spec.party.clone());
                    break 'pairs;
                }
            }
        }
    }
    out
}

/// Roles contributed by one node of one path (for the plan dump and tests).
#[derive(Debug, Clone, Serialize)]
pub struct DeltaRoles {
    pub solution: SolutionId,
    pub leaders: BTreeSet<PartyId>,
    pub redundancy_providers: BTreeSet<PartyId>,
}

/// A swap scheme (s, q): the solution's digraph plus the hashlock set
/// accumulated along the path q.
#[derive(Debug, Clone)]
pub struct SchemePlan {
    pub id: SchemeId,
    pub solution: SolutionId,
    /// Path prefix q = [root, ..., solution].
    pub path_nodes: Vec<SolutionId>,
    pub graph: Digraph,
    pub hashlocks: BTreeSet<Hashlock>,
    /// C_{s,q}: conjunction of all hashlocks.
    pub circuit: CircuitExpr,
    /// C^new in ProtocolB (negations of conflicting higher-priority scheme
    /// circuits conjoined with C_{s,q}).
    pub circuit_b: Option<CircuitExpr>,
    /// FVS of the scheme's graph: the parties that escrow first.
    pub escrow_leaders: BTreeSet<PartyId>,
    /// Preference index of the scheme's solution (ProtocolB; 0 = top).
    pub rank: Option<usize>,
    /// Per-node roles along the path.
    pub delta_roles: Vec<DeltaRoles>,
}

impl SchemePlan {
    pub fn label(&self) -> String {
        let path: Vec<String> = self.path_nodes.iter().map(|s| format!("s{s}")).collect();
        format!("scheme{}[{}]", self.id, path.join(">"))
    }
}

/// Everything the engine needs to run a protocol: solutions, schemes,
/// hashlocks, generators, and secrets.
#[derive(Debug, Clone)]
pub struct ClearingPlan {
    pub solutions: Vec<Solution>,
    pub dag_edges: BTreeSet<(SolutionId, SolutionId)>,
    pub paths: Vec<DagPath>,
    pub redundancy_providers: BTreeSet<PartyId>,
    pub schemes: Vec<SchemePlan>,
    pub generator_of: BTreeMap<Hashlock, (PartyId, SolutionId)>,
    pub secrets: BTreeMap<(PartyId, SolutionId), Secret>,
    /// Solution ids in preference order (ProtocolB only).
    pub preference: Option<Vec<SolutionId>>,
    /// Pairs of solutions whose joint completion falsifies some predicate.
    pub conflicts: BTreeSet<(SolutionId, SolutionId)>,
}

impl ClearingPlan {
    pub fn scheme(&self, id: SchemeId) -> &SchemePlan {
        &self.schemes[id]
    }

    pub fn hashlock_for(&self, party: &PartyId, solution: SolutionId) -> Option<Hashlock> {
        self.secrets
            .get(&(party.clone(), solution))
            .map(make_hashlock)
    }

    pub fn schemes_using(&self, lock: &Hashlock) -> Vec<&SchemePlan> {
        self.schemes
            .iter()
            .filter(|s| s.hashlocks.contains(lock))
            .collect()
    }

    pub fn conflict(&self, a: SolutionId, b: SolutionId) -> bool {
        self.conflicts.contains(&(a.min(b), a.max(b)))
    }
}

fn fresh_secret(
    rng: &mut dyn RngCore,
    party: &PartyId,
    solution: SolutionId,
) -> Secret {
    let mut value = [0u8; 32];
    rng.fill_bytes(&mut value);
    Secret {
        value,
        generator: party.clone(),
        solution,
    }
}

/// Assigns hashlocks along every DAG path. Roots draw fresh hashlocks from
/// FVS(G_s) plus the redundancy providers present in the solution; each
/// path step contributes new leaders only when the delta graph is cyclic and
/// new redundancy providers only when the step introduces them, and the
/// hashlock set accumulates. Secrets are indexed by (generator, solution),
/// so a party reaching the same solution along two paths reuses one secret.
/// Schemes with identical (solution, hashlock set) are emitted once.
#[allow(clippy::too_many_arguments)]
pub fn assign_hashlocks(
    dag: &SolutionDag,
    paths: &[DagPath],
    redundancy_providers: &BTreeSet<PartyId>,
    g: &Digraph,
    rng: &mut dyn RngCore,
) -> (
    Vec<SchemePlan>,
    BTreeMap<Hashlock, (PartyId, SolutionId)>,
    BTreeMap<(PartyId, SolutionId), Secret>,
) {
    let mut secrets: BTreeMap<(PartyId, SolutionId), Secret> = BTreeMap::new();
    let mut generator_of: BTreeMap<Hashlock, (PartyId, SolutionId)> = BTreeMap::new();
    let mut schemes: Vec<SchemePlan> = Vec::new();
    let mut seen: BTreeSet<(SolutionId, Vec<Hashlock>)> = BTreeSet::new();

    let subgraph =
        |s: SolutionId| g.solution_subgraph(&dag.solutions[s].assignment);

    // Secrets must be drawn in a deterministic order independent of path
    // traversal, so pre-walk the paths to find every (party, solution) that
    // generates, in order.
    let lock_for = |party: &PartyId,
                        solution: SolutionId,
                        secrets: &mut BTreeMap<(PartyId, SolutionId), Secret>,
                        generator_of: &mut BTreeMap<Hashlock, (PartyId, SolutionId)>,
                        rng: &mut dyn RngCore|
     -> Hashlock {
        let key = (party.clone(), solution);
        let secret = secrets
            .entry(key.clone())
            .or_insert_with(|| fresh_secret(rng, party, solution));
        let lock = make_hashlock(secret);
        generator_of.insert(lock, key);
        lock
    };

    for path in paths {
        let root = path.nodes[0];
        let root_graph = subgraph(root);
        let root_leaders = if root_graph.is_acyclic() {
            BTreeSet::new()
        } else {
            root_graph.feedback_vertex_set()
        };
        let root_rps: BTreeSet<PartyId> = redundancy_providers
            .iter()
            .filter(|p| root_graph.contains_vertex(p))
            .cloned()
            .collect();
        let mut locks: BTreeSet<Hashlock> = BTreeSet::new();
        for x in root_leaders.union(&root_rps) {
            locks.insert(lock_for(x, root, &mut secrets, &mut generator_of, rng));
        }
        let mut roles = vec![DeltaRoles {
            solution: root,
            leaders: root_leaders,
            redundancy_providers: root_rps,
        }];
        push_scheme(&mut schemes, &mut seen, dag, g, root, &path.nodes[..1], &locks, &roles);

        for i in 1..path.nodes.len() {
            let prev = path.nodes[i - 1];
            let cur = path.nodes[i];
            let prev_arcs = dag.solutions[prev].true_arcs();
            let cur_arcs = dag.solutions[cur].true_arcs();
            let delta_arcs: BTreeSet<ArcId> = cur_arcs.difference(&prev_arcs).cloned().collect();
            let delta = g.arc_induced(&delta_arcs);
            let delta_leaders = if delta.is_acyclic() {
                BTreeSet::new()
            } else {
                delta.feedback_vertex_set()
            };
            let prev_vertices = subgraph(prev).vertex_set().clone();
            let introduced: BTreeSet<PartyId> = delta
                .vertex_set()
                .difference(&prev_vertices)
                .cloned()
                .collect();
            let delta_rps: BTreeSet<PartyId> = redundancy_providers
                .iter()
                .filter(|p| introduced.contains(p))
                .cloned()
                .collect();
            for x in delta_leaders.union(&delta_rps) {
                locks.insert(lock_for(x, cur, &mut secrets, &mut generator_of, rng));
            }
            roles.push(DeltaRoles {
                solution: cur,
                leaders: delta_leaders,
                redundancy_providers: delta_rps,
            });
            push_scheme(
                &mut schemes,
                &mut seen,
                dag,
                g,
                cur,
                &path.nodes[..=i],
                &locks,
                &roles,
            );
        }
    }
    (schemes, generator_of, secrets)
}

#[allow(clippy::too_many_arguments)]
fn push_scheme(
    schemes: &mut Vec<SchemePlan>,
    seen: &mut BTreeSet<(SolutionId, Vec<Hashlock>)>,
    dag: &SolutionDag,
    g: &Digraph,
    solution: SolutionId,
    path_nodes: &[SolutionId],
    locks: &BTreeSet<Hashlock>,
    roles: &[DeltaRoles],
) {
    let key = (solution, locks.iter().copied().collect::<Vec<_>>());
    if !seen.insert(key) {
        return;
    }
    let graph = g.solution_subgraph(&dag.solutions[solution].assignment);
    let escrow_leaders = graph.feedback_vertex_set();
    schemes.push(SchemePlan {
        id: schemes.len(),
        solution,
        path_nodes: path_nodes.to_vec(),
        circuit: CircuitExpr::and_of(locks.iter().copied()),
        hashlocks: locks.clone(),
        graph,
        circuit_b: None,
        escrow_leaders,
        rank: None,
        delta_roles: roles.to_vec(),
    });
}

/// Greedy maximal compatible set over the candidate schemes, in scheme-id
/// order: a scheme joins if completing it together with everything already
/// selected keeps every party's predicate true.
pub fn maximal_compatible_set(
    schemes: &[SchemePlan],
    specs: &[CompiledSpec],
    solutions: &[Solution],
    g: &Digraph,
    candidates: &BTreeSet<SchemeId>,
    mode: ClearingMode,
) -> BTreeSet<SchemeId> {
    let mut selected: BTreeSet<SchemeId> = BTreeSet::new();
    let mut selected_arcs: Vec<BTreeSet<ArcId>> = Vec::new();
    for scheme in schemes {
        if !candidates.contains(&scheme.id) {
            continue;
        }
        let mut sets = selected_arcs.clone();
        sets.push(solutions[scheme.solution].true_arcs());
        let union = union_assignment(g, sets);
        let ok = specs.iter().all(|spec| {
            evaluate(&spec.clearing_predicate(mode), &union).expect("total assignment")
        });
        if ok {
            selected_arcs.push(solutions[scheme.solution].true_arcs());
            selected.insert(scheme.id);
        }
    }
    selected
}

/// Total preference order over solutions. An explicit ranking is used
/// verbatim (validated as a permutation); the default prefers larger
/// solutions (descending arc count), ties broken by ascending id.
pub fn rank_solutions(
    solutions: &[Solution],
    ranking: Option<&[usize]>,
) -> Result<Vec<SolutionId>, ClearingError> {
    if solutions.is_empty() {
        return Err(ClearingError::NoSolutions);
    }
    match ranking {
        Some(r) => {
            let mut sorted = r.to_vec();
            sorted.sort_unstable();
            if sorted != (0..solutions.len()).collect::<Vec<_>>() {
                return Err(ClearingError::RankingNotPermutation {
                    expected: solutions.len(),
                    got: r.to_vec(),
                });
            }
            Ok(r.to_vec())
        }
        None => {
            let mut order: Vec<SolutionId> = (0..solutions.len()).collect();
            order.sort_by_key(|&s| {
                (
                    std::cmp::Reverse(solutions[s].true_arcs().len()),
                    s,
                )
            });
            Ok(order)
        }
    }
}

/// Computes the conflict relation over solutions: a pair conflicts when
/// completing both falsifies some party's clearing predicate.
pub fn solution_conflicts(
    specs: &[CompiledSpec],
    solutions: &[Solution],
    g: &Digraph,
    mode: ClearingMode,
) -> BTreeSet<(SolutionId, SolutionId)> {
    let mut out = BTreeSet::new();
    for i in 0..solutions.len() {
        for j in (i + 1)..solutions.len() {
            let union =
                union_assignment(g, [solutions[i].true_arcs(), solutions[j].true_arcs()]);
            let broken = specs.iter().any(|spec| {
                !evaluate(&spec.clearing_predicate(mode), &union).expect("total assignment")
            });
            if broken {
                out.insert((i, j));
            }
        }
    }
    out
}

/// ProtocolB circuits: each scheme's new circuit conjoins the negations of
/// every conflicting higher-priority solution's scheme circuits (over all
/// their paths) with its own.
pub fn build_circuits_b(
    schemes: &mut [SchemePlan],
    preference: &[SolutionId],
    conflicts: &BTreeSet<(SolutionId, SolutionId)>,
) {
    let rank_of: BTreeMap<SolutionId, usize> = preference
        .iter()
        .enumerate()
        .map(|(rank, s)| (*s, rank))
        .collect();
    let old_circuits: Vec<(SolutionId, CircuitExpr)> = schemes
        .iter()
        .map(|s| (s.solution, s.circuit.clone()))
        .collect();
    for scheme in schemes.iter_mut() {
        let my_rank = rank_of[&scheme.solution];
        scheme.rank = Some(my_rank);
        let mut terms: Vec<CircuitExpr> = Vec::new();
        for higher in preference.iter().take(my_rank) {
            let pair = (
                scheme.solution.min(*higher),
                scheme.solution.max(*higher),
            );
            if !conflicts.contains(&pair) {
                continue;
            }
            for (sol, circuit) in &old_circuits {
                if sol == higher {
                    terms.push(CircuitExpr::Not(Box::new(circuit.clone())));
                }
            }
        }
        terms.push(scheme.circuit.clone());
        scheme.circuit_b = Some(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            CircuitExpr::And(terms)
        });
    }
}

/// Runs the whole market-clearing stage.
pub fn build_plan(
    specs: &[CompiledSpec],
    g: &Digraph,
    limit: usize,
    mode: ClearingMode,
    ranking: Option<&[usize]>,
    rng: &mut dyn RngCore,
) -> Result<ClearingPlan, ClearingError> {
    let phi = crate::predicate::conjoin_all(
        specs.iter().map(|s| s.clearing_predicate(mode)),
    );
    let solutions = enumerate_solutions(&phi, g, limit);
    let dag = build_solution_dag(solutions.clone(), g);
    let paths = enumerate_paths(&dag);
    let rps = find_redundancy_providers(specs, &solutions, g, mode);
    let (mut schemes, generator_of, secrets) =
        assign_hashlocks(&dag, &paths, &rps, g, rng);
    let conflicts = solution_conflicts(specs, &solutions, g, mode);
    let preference = match mode {
        ClearingMode::ProtocolA => {
            if ranking.is_some() && !solutions.is_empty() {
                // Ranking input is honored in ProtocolA only as a scheme
                // priority hint for settlement bookkeeping; validate anyway.
                rank_solutions(&solutions, ranking).map(Some)?
            } else {
                None
            }
        }
        ClearingMode::ProtocolB => {
            if solutions.is_empty() {
                Some(Vec::new())
            } else {
                let order = rank_solutions(&solutions, ranking)?;
                build_circuits_b(&mut schemes, &order, &conflicts);
                Some(order)
            }
        }
    };
    Ok(ClearingPlan {
        solutions,
        dag_edges: dag.edges.clone(),
        paths,
        redundancy_providers: rps,
        schemes,
        generator_of,
        secrets,
        preference,
        conflicts,
    })
}
