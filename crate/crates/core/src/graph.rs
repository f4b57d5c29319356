//! Directed-graph model of proposed transfers.
//!
//! Every vertex is a party, every arc a proposed asset transfer labeled with
//! the asset it carries. All protocol machinery (market clearing, hashkey
//! path checks, escrow ordering) consumes the algorithms here. Graphs are
//! immutable once built and cheap to clone at desk scale.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a party (a vertex). Ordered lexicographically; the smallest
/// id wins every deterministic tie-break in the engine.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartyId(pub String);

impl PartyId {
    pub fn new(id: impl Into<String>) -> Self {
        PartyId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PartyId {
    fn from(s: &str) -> Self {
        PartyId(s.to_string())
    }
}

/// Identifier of an arc (a proposed transfer).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArcId(pub String);

impl ArcId {
    pub fn new(id: impl Into<String>) -> Self {
        ArcId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArcId {
    fn from(s: &str) -> Self {
        ArcId(s.to_string())
    }
}

/// Identifier of an asset. One asset lives on exactly one ledger; whether an
/// asset may label more than one arc depends on the protocol (ProtocolB
/// allows reuse across outgoing arcs of the same party).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AssetId(pub String);

impl AssetId {
    pub fn new(id: impl Into<String>) -> Self {
        AssetId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AssetId {
    fn from(s: &str) -> Self {
        AssetId(s.to_string())
    }
}

/// A proposed transfer: `from` pays `asset` to `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferArc {
    pub id: ArcId,
    pub from: PartyId,
    pub to: PartyId,
    pub asset: AssetId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("arc {0} is a self-loop on party {1}")]
    SelfLoop(ArcId, PartyId),
    #[error("arc {0} endpoint {1} is not a declared party")]
    UnknownEndpoint(ArcId, PartyId),
    #[error("duplicate arc id {0}")]
    DuplicateArc(ArcId),
    #[error("duplicate (from, to, asset) triple on arcs {0} and {1}")]
    DuplicateTriple(ArcId, ArcId),
}

/// A digraph over parties. Arc records carry their asset labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    vertices: BTreeSet<PartyId>,
    arcs: BTreeMap<ArcId, TransferArc>,
}

impl Digraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: PartyId) {
        self.vertices.insert(v);
    }

    pub fn add_arc(&mut self, arc: TransferArc) -> Result<(), GraphError> {
        if arc.from == arc.to {
            return Err(GraphError::SelfLoop(arc.id, arc.from));
        }
        for end in [&arc.from, &arc.to] {
            if !self.vertices.contains(end) {
                return Err(GraphError::UnknownEndpoint(arc.id.clone(), end.clone()));
            }
        }
        if self.arcs.contains_key(&arc.id) {
            return Err(GraphError::DuplicateArc(arc.id));
        }
        if let Some(dup) = self
            .arcs
            .values()
            .find(|a| a.from == arc.from && a.to == arc.to && a.asset == arc.asset)
        {
            return Err(GraphError::DuplicateTriple(dup.id.clone(), arc.id));
        }
        self.arcs.insert(arc.id.clone(), arc);
        Ok(())
    }

    pub fn vertices(&self) -> impl Iterator<Item = &PartyId> {
        self.vertices.iter()
    }

    pub fn vertex_set(&self) -> &BTreeSet<PartyId> {
        &self.vertices
    }

    pub fn contains_vertex(&self, v: &PartyId) -> bool {
        self.vertices.contains(v)
    }

    pub fn arcs(&self) -> impl Iterator<Item = &TransferArc> {
        self.arcs.values()
    }

    pub fn arc(&self, id: &ArcId) -> Option<&TransferArc> {
        self.arcs.get(id)
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = &ArcId> {
        self.arcs.keys()
    }

    pub fn arc_id_set(&self) -> BTreeSet<ArcId> {
        self.arcs.keys().cloned().collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn outgoing<'a>(&'a self, v: &'a PartyId) -> impl Iterator<Item = &'a TransferArc> + 'a {
        self.arcs.values().filter(move |a| &a.from == v)
    }

    pub fn incoming<'a>(&'a self, v: &'a PartyId) -> impl Iterator<Item = &'a TransferArc> + 'a {
        self.arcs.values().filter(move |a| &a.to == v)
    }

    /// True if the two vertices are joined by an arc in either direction.
    pub fn adjacent(&self, u: &PartyId, v: &PartyId) -> bool {
        self.arcs
            .values()
            .any(|a| (&a.from == u && &a.to == v) || (&a.from == v && &a.to == u))
    }

    pub fn has_arc_between(&self, from: &PartyId, to: &PartyId) -> bool {
        self.arcs.values().any(|a| &a.from == from && &a.to == to)
    }

    fn successors(&self, v: &PartyId) -> BTreeSet<&PartyId> {
        self.arcs
            .values()
            .filter(|a| &a.from == v)
            .map(|a| &a.to)
            .collect()
    }

    fn reachable_from(&self, start: &PartyId) -> BTreeSet<PartyId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.clone()];
        while let Some(v) = stack.pop() {
            if !seen.insert(v.clone()) {
                continue;
            }
            for n in self.successors(&v) {
                if !seen.contains(n) {
                    stack.push(n.clone());
                }
            }
        }
        seen
    }

    /// True iff every ordered vertex pair is connected by a directed path.
    pub fn is_strongly_connected(&self) -> bool {
        let Some(first) = self.vertices.iter().next() else {
            return false;
        };
        if self.reachable_from(first).len() != self.vertices.len() {
            return false;
        }
        let reversed = self.reversed();
        reversed.reachable_from(first).len() == self.vertices.len()
    }

    fn reversed(&self) -> Digraph {
        let mut g = Digraph::new();
        for v in &self.vertices {
            g.add_vertex(v.clone());
        }
        for a in self.arcs.values() {
            g.arcs.insert(
                a.id.clone(),
                TransferArc {
                    id: a.id.clone(),
                    from: a.to.clone(),
                    to: a.from.clone(),
                    asset: a.asset.clone(),
                },
            );
        }
        g
    }

    /// Cycle detection over the vertex subset that remains after removing
    /// `removed`.
    fn has_cycle_without(&self, removed: &BTreeSet<PartyId>) -> bool {
        // Kahn's algorithm on the remaining vertices.
        let remaining: Vec<&PartyId> = self.vertices.difference(removed).collect();
        let mut indeg: BTreeMap<&PartyId, usize> = remaining.iter().map(|v| (*v, 0)).collect();
        for a in self.arcs.values() {
            if removed.contains(&a.from) || removed.contains(&a.to) {
                continue;
            }
            *indeg.get_mut(&a.to).unwrap() += 1;
        }
        let mut queue: Vec<&PartyId> = indeg
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(v, _)| *v)
            .collect();
        let mut visited = 0usize;
        while let Some(v) = queue.pop() {
            visited += 1;
            for a in self.arcs.values() {
                if &a.from == v && !removed.contains(&a.to) {
                    let d = indeg.get_mut(&a.to).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        queue.push(&a.to);
                    }
                }
            }
        }
        visited != remaining.len()
    }

    pub fn is_acyclic(&self) -> bool {
        !self.has_cycle_without(&BTreeSet::new())
    }

    /// A vertex set whose removal leaves the graph acyclic.
    ///
    /// Small graphs (up to [`EXACT_FVS_LIMIT`] vertices) are solved exactly by
    /// subset search in increasing size, so the result is a minimum FVS and
    /// the tie-break (lexicographically smallest set of the minimum size) is
    /// deterministic. Larger graphs fall back to a greedy heuristic with a
    /// minimality pass.
    pub fn feedback_vertex_set(&self) -> BTreeSet<PartyId> {
        if self.is_acyclic() {
            return BTreeSet::new();
        }
        if self.vertex_count() <= EXACT_FVS_LIMIT {
            return self.exact_fvs();
        }
        self.greedy_fvs()
    }

    fn exact_fvs(&self) -> BTreeSet<PartyId> {
        let verts: Vec<&PartyId> = self.vertices.iter().collect();
        let n = verts.len();
        for size in 1..=n {
            // Masks in ascending numeric order visit lexicographically
            // smallest vertex sets first (bit i = i-th smallest vertex).
            for mask in 0u32..(1u32 << n) {
                if mask.count_ones() as usize != size {
                    continue;
                }
                let subset: BTreeSet<PartyId> = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| verts[i].clone())
                    .collect();
                if !self.has_cycle_without(&subset) {
                    return subset;
                }
            }
        }
        unreachable!("removing all vertices always yields an acyclic graph")
    }

    fn greedy_fvs(&self) -> BTreeSet<PartyId> {
        let mut removed: BTreeSet<PartyId> = BTreeSet::new();
        while self.has_cycle_without(&removed) {
            // Pick the remaining vertex with the largest in*out degree; ties
            // go to the smallest id.
            let candidates: Vec<PartyId> = self.vertices.difference(&removed).cloned().collect();
            let mut best: Option<(usize, &PartyId)> = None;
            for v in &candidates {
                let indeg = self
                    .arcs
                    .values()
                    .filter(|a| &a.to == v && !removed.contains(&a.from))
                    .count();
                let outdeg = self
                    .arcs
                    .values()
                    .filter(|a| &a.from == v && !removed.contains(&a.to))
                    .count();
                let score = indeg * outdeg;
                match best {
                    Some((s, _)) if s >= score => {}
                    _ => best = Some((score, v)),
                }
            }
            let chosen = best.expect("cyclic graph has vertices").1.clone();
            removed.insert(chosen);
        }
        // Minimality pass: drop any vertex whose removal is not needed.
        for v in removed.clone() {
            let mut without = removed.clone();
            without.remove(&v);
            if !self.has_cycle_without(&without) {
                removed = without;
            }
        }
        removed
    }

    /// Length (vertex count) of the longest simple directed path, by
    /// exhaustive DFS. Scenario graphs are capped at 16 parties.
    pub fn max_path_length(&self) -> usize {
        let mut best = if self.vertices.is_empty() { 0 } else { 1 };
        for start in &self.vertices {
            let mut on_path = BTreeSet::new();
            on_path.insert(start.clone());
            self.longest_from(start, &mut on_path, &mut best);
        }
        best
    }

    fn longest_from(&self, v: &PartyId, on_path: &mut BTreeSet<PartyId>, best: &mut usize) {
        *best = (*best).max(on_path.len());
        for next in self.successors(v) {
            if !on_path.contains(next) {
                let next = next.clone();
                on_path.insert(next.clone());
                self.longest_from(&next, on_path, best);
                on_path.remove(&next);
            }
        }
    }

    /// Symmetric closure with one edge per unordered pair: the undirected
    /// view used by ProtocolB hashkeys. Each undirected edge {u, v} appears
    /// as the arc pair u->v / v->u carrying a synthesized id.
    pub fn to_undirected(&self) -> Digraph {
        let mut g = Digraph::new();
        for v in &self.vertices {
            g.add_vertex(v.clone());
        }
        let mut pairs: BTreeSet<(PartyId, PartyId)> = BTreeSet::new();
        for a in self.arcs.values() {
            let (lo, hi) = if a.from <= a.to {
                (a.from.clone(), a.to.clone())
            } else {
                (a.to.clone(), a.from.clone())
            };
            pairs.insert((lo, hi));
        }
        for (lo, hi) in pairs {
            for (x, y) in [(&lo, &hi), (&hi, &lo)] {
                let id = ArcId::new(format!("u:{x}:{y}"));
                g.arcs.insert(
                    id.clone(),
                    TransferArc {
                        id,
                        from: x.clone(),
                        to: y.clone(),
                        asset: AssetId::new("~undirected"),
                    },
                );
            }
        }
        g
    }

    /// Checks that `path` is a simple directed path in this graph.
    pub fn is_directed_path(&self, path: &[PartyId]) -> bool {
        if path.is_empty() {
            return false;
        }
        let distinct: BTreeSet<&PartyId> = path.iter().collect();
        if distinct.len() != path.len() {
            return false;
        }
        if !path.iter().all(|v| self.vertices.contains(v)) {
            return false;
        }
        path.windows(2)
            .all(|w| self.has_arc_between(&w[0], &w[1]))
    }

    /// The subgraph of arcs the assignment maps to true, with their
    /// endpoints as the vertex set.
    pub fn solution_subgraph(&self, assignment: &BTreeMap<ArcId, bool>) -> Digraph {
        let mut g = Digraph::new();
        for a in self.arcs.values() {
            if assignment.get(&a.id).copied().unwrap_or(false) {
                g.add_vertex(a.from.clone());
                g.add_vertex(a.to.clone());
            }
        }
        for a in self.arcs.values() {
            if assignment.get(&a.id).copied().unwrap_or(false) {
                g.add_arc(a.clone()).expect("subgraph arc is valid");
            }
        }
        g
    }

    /// Restriction to a set of arcs (endpoints only), used for delta graphs
    /// along solution-DAG paths.
    pub fn arc_induced(&self, arcs: &BTreeSet<ArcId>) -> Digraph {
        let mut g = Digraph::new();
        for id in arcs {
            if let Some(a) = self.arcs.get(id) {
                g.add_vertex(a.from.clone());
                g.add_vertex(a.to.clone());
            }
        }
        for id in arcs {
            if let Some(a) = self.arcs.get(id) {
                g.add_arc(a.clone()).expect("induced arc is valid");
            }
        }
        g
    }
}

/// Largest vertex count solved by exhaustive minimum-FVS search.
pub const EXACT_FVS_LIMIT: usize = 12;
