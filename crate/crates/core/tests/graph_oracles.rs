//! Graph algorithm checks against independent oracles: pairwise-BFS strong
//! connectivity, exhaustive-subset minimum FVS, and exhaustive-DFS longest
//! path.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use swapforge_core::graph::{ArcId, AssetId, Digraph, PartyId, TransferArc};

fn graph(parties: &[&str], arcs: &[(&str, &str, &str)]) -> Digraph {
    let mut g = Digraph::new();
    for p in parties {
        g.add_vertex(PartyId::from(*p));
    }
    for (i, (id, from, to)) in arcs.iter().enumerate() {
        g.add_arc(TransferArc {
            id: ArcId::from(*id),
            from: PartyId::from(*from),
            to: PartyId::from(*to),
            asset: AssetId::new(format!("asset{i}")),
        })
        .unwrap();
    }
    g
}

// ---------------------------------------------------------------------------
// Oracles (independent of the implementation path they check).
// ---------------------------------------------------------------------------

fn bfs_reaches(g: &Digraph, from: &PartyId, to: &PartyId) -> bool {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(v) = queue.pop_front() {
        if v == *to {
            return true;
        }
        if !seen.insert(v.clone()) {
            continue;
        }
        for a in g.arcs() {
            if a.from == v && !seen.contains(&a.to) {
                queue.push_back(a.to.clone());
            }
        }
    }
    false
}

fn sc_oracle(g: &Digraph) -> bool {
    let vs: Vec<&PartyId> = g.vertices().collect();
    if vs.is_empty() {
        return false;
    }
    vs.iter()
        .all(|u| vs.iter().all(|v| u == v || bfs_reaches(g, u, v)))
}

fn acyclic_without(g: &Digraph, removed: &BTreeSet<PartyId>) -> bool {
    // DFS cycle detection over the remaining vertices.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    fn visit(
        g: &Digraph,
        removed: &BTreeSet<PartyId>,
        v: &PartyId,
        marks: &mut BTreeMap<PartyId, Mark>,
    ) -> bool {
        marks.insert(v.clone(), Mark::Grey);
        for a in g.arcs() {
            if &a.from == v && !removed.contains(&a.to) {
                match marks.get(&a.to).copied().unwrap_or(Mark::White) {
                    Mark::Grey => return false,
                    Mark::White => {
                        if !visit(g, removed, &a.to, marks) {
                            return false;
                        }
                    }
                    Mark::Black => {}
                }
            }
        }
        marks.insert(v.clone(), Mark::Black);
        true
    }
    let mut marks: BTreeMap<PartyId, Mark> = BTreeMap::new();
    for v in g.vertices() {
        if removed.contains(v) {
            continue;
        }
        if marks.get(v).copied().unwrap_or(Mark::White) == Mark::White
            && !visit(g, removed, v, &mut marks)
        {
            return false;
        }
    }
    true
}

fn min_fvs_size_oracle(g: &Digraph) -> usize {
    let verts: Vec<PartyId> = g.vertices().cloned().collect();
    let n = verts.len();
    assert!(n <= 16);
    for size in 0..=n {
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let subset: BTreeSet<PartyId> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| verts[i].clone())
                .collect();
            if acyclic_without(g, &subset) {
                return size;
            }
        }
    }
    n
}

fn longest_path_oracle(g: &Digraph) -> usize {
    fn dfs(g: &Digraph, v: &PartyId, on: &mut Vec<PartyId>, best: &mut usize) {
        *best = (*best).max(on.len());
        for a in g.arcs() {
            if &a.from == v && !on.contains(&a.to) {
                on.push(a.to.clone());
                dfs(g, &a.to, on, best);
                on.pop();
            }
        }
    }
    let mut best = 0;
    for v in g.vertices() {
        let mut on = vec![v.clone()];
        dfs(g, v, &mut on, &mut best);
    }
    best
}

fn example2_graph() -> Digraph {
    graph(
        &["alice", "bob", "carol", "david"],
        &[
            ("ac", "alice", "carol"),
            ("ad", "alice", "david"),
            ("cb", "carol", "bob"),
            ("db", "david", "bob"),
            ("ba", "bob", "alice"),
        ],
    )
}

fn fig2_graph() -> Digraph {
    graph(
        &["alice", "bob", "carol"],
        &[
            ("a1", "alice", "bob"),
            ("a2", "alice", "carol"),
            ("b1", "bob", "alice"),
            ("b2", "bob", "carol"),
            ("c1", "carol", "alice"),
            ("c2", "carol", "bob"),
        ],
    )
}

/// Seven-party ring with chords, the shape used for the shortcut-appendix
/// timeout discussion.
fn seven_party_graph() -> Digraph {
    graph(
        &["a", "b", "c", "d", "e", "f", "g"],
        &[
            ("ab", "a", "b"),
            ("bc", "b", "c"),
            ("cd", "c", "d"),
            ("de", "d", "e"),
            ("ef", "e", "f"),
            ("fg", "f", "g"),
            ("ga", "g", "a"),
            ("ce", "c", "e"),
            ("eb", "e", "b"),
        ],
    )
}

fn seeded_random_graph(seed: u64, n: usize, extra_arcs: usize) -> Digraph {
    // Small LCG; no external randomness so the suite is reproducible.
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move |bound: usize| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as usize) % bound
    };
    let parties: Vec<String> = (0..n).map(|i| format!("p{i:02}")).collect();
    let mut g = Digraph::new();
    for p in &parties {
        g.add_vertex(PartyId::new(p.clone()));
    }
    // Ring for strong connectivity, then random chords.
    let mut arcs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let mut tries = 0;
    while arcs.len() < n + extra_arcs && tries < 100 {
        tries += 1;
        let u = next(n);
        let v = next(n);
        if u != v && !arcs.contains(&(u, v)) {
            arcs.push((u, v));
        }
    }
    for (i, (u, v)) in arcs.iter().enumerate() {
        g.add_arc(TransferArc {
            id: ArcId::new(format!("e{i:02}")),
            from: PartyId::new(parties[*u].clone()),
            to: PartyId::new(parties[*v].clone()),
            asset: AssetId::new(format!("t{i:02}")),
        })
        .unwrap();
    }
    g
}

// ---------------------------------------------------------------------------
// Strong connectivity
// ---------------------------------------------------------------------------

#[test]
fn three_cycle_is_strongly_connected() {
    let g = graph(&["a", "b", "c"], &[("ab", "a", "b"), ("bc", "b", "c"), ("ca", "c", "a")]);
    assert!(g.is_strongly_connected());
}

#[test]
fn single_arc_is_not_strongly_connected() {
    let g = graph(&["a", "b"], &[("ab", "a", "b")]);
    assert!(!g.is_strongly_connected());
}

#[test]
fn example2_graph_is_strongly_connected_per_bfs_oracle() {
    let g = example2_graph();
    assert!(sc_oracle(&g));
    assert!(g.is_strongly_connected());
}

#[test]
fn strong_connectivity_matches_oracle_on_seeded_graphs() {
    for seed in 0..40u64 {
        let g = seeded_random_graph(seed, 3 + (seed % 6) as usize, (seed % 5) as usize);
        assert_eq!(g.is_strongly_connected(), sc_oracle(&g), "seed {seed}");
        // Also exercise non-SC graphs: drop one ring arc.
        let mut partial = Digraph::new();
        for v in g.vertices() {
            partial.add_vertex(v.clone());
        }
        for (i, a) in g.arcs().enumerate() {
            if i != 0 {
                partial.add_arc(a.clone()).unwrap();
            }
        }
        assert_eq!(
            partial.is_strongly_connected(),
            sc_oracle(&partial),
            "seed {seed} partial"
        );
    }
}

// ---------------------------------------------------------------------------
// Feedback vertex set
// ---------------------------------------------------------------------------

#[test]
fn single_cycle_fvs_is_smallest_party() {
    let g = graph(&["a", "b", "c"], &[("ab", "a", "b"), ("bc", "b", "c"), ("ca", "c", "a")]);
    let fvs = g.feedback_vertex_set();
    assert_eq!(fvs, BTreeSet::from([PartyId::from("a")]));
}

#[test]
fn acyclic_graph_has_empty_fvs() {
    let g = graph(&["a", "b", "c"], &[("ab", "a", "b"), ("bc", "b", "c")]);
    assert!(g.feedback_vertex_set().is_empty());
}

#[test]
fn fig2_fvs_matches_exhaustive_minimum() {
    let g = fig2_graph();
    let fvs = g.feedback_vertex_set();
    assert!(acyclic_without(&g, &fvs));
    assert_eq!(fvs.len(), min_fvs_size_oracle(&g));
}

#[test]
fn fvs_is_exact_minimum_up_to_twelve_vertices() {
    for seed in 0..25u64 {
        let n = 3 + (seed % 10) as usize;
        let g = seeded_random_graph(seed, n, (seed % 7) as usize);
        let fvs = g.feedback_vertex_set();
        assert!(acyclic_without(&g, &fvs), "seed {seed}: removal not acyclic");
        assert_eq!(
            fvs.len(),
            min_fvs_size_oracle(&g),
            "seed {seed}: not minimum"
        );
    }
}

#[test]
fn fvs_on_larger_graphs_is_acyclic_and_within_twice_optimum() {
    for seed in 0..8u64 {
        let n = 13 + (seed % 4) as usize;
        let g = seeded_random_graph(seed, n, (seed % 9) as usize);
        let fvs = g.feedback_vertex_set();
        assert!(acyclic_without(&g, &fvs), "seed {seed}");
        let optimum = min_fvs_size_oracle(&g);
        assert!(
            fvs.len() <= 2 * optimum.max(1),
            "seed {seed}: |fvs|={} > 2*{optimum}",
            fvs.len()
        );
    }
}

// ---------------------------------------------------------------------------
// Longest simple path
// ---------------------------------------------------------------------------

#[test]
fn single_arc_path_length_is_two() {
    let g = graph(&["a", "b"], &[("ab", "a", "b")]);
    assert_eq!(g.max_path_length(), 2);
}

#[test]
fn three_cycle_path_length_matches_dfs_oracle() {
    let g = graph(&["a", "b", "c"], &[("ab", "a", "b"), ("bc", "b", "c"), ("ca", "c", "a")]);
    assert_eq!(g.max_path_length(), longest_path_oracle(&g));
    assert_eq!(g.max_path_length(), 3);
}

#[test]
fn seven_party_graph_path_length_matches_dfs_oracle() {
    let g = seven_party_graph();
    assert_eq!(g.max_path_length(), longest_path_oracle(&g));
}

#[test]
fn path_length_at_least_two_and_matches_oracle_on_seeded_graphs() {
    for seed in 0..30u64 {
        let g = seeded_random_graph(seed, 3 + (seed % 5) as usize, (seed % 4) as usize);
        let len = g.max_path_length();
        assert!(len >= 2, "seed {seed}");
        assert_eq!(len, longest_path_oracle(&g), "seed {seed}");
    }
}

// ---------------------------------------------------------------------------
// Undirected view
// ---------------------------------------------------------------------------

#[test]
fn antiparallel_arcs_collapse_to_one_edge() {
    let g = graph(&["a", "b"], &[("ab", "a", "b"), ("ba", "b", "a")]);
    let u = g.to_undirected();
    // One undirected edge, represented as the symmetric arc pair.
    assert_eq!(u.arc_count(), 2);
    assert!(u.has_arc_between(&PartyId::from("a"), &PartyId::from("b")));
    assert!(u.has_arc_between(&PartyId::from("b"), &PartyId::from("a")));
}

#[test]
fn three_cycle_becomes_triangle() {
    let g = graph(&["a", "b", "c"], &[("ab", "a", "b"), ("bc", "b", "c"), ("ca", "c", "a")]);
    let u = g.to_undirected();
    assert_eq!(u.arc_count(), 6);
    assert_eq!(u.max_path_length(), 3);
}

#[test]
fn empty_arc_set_stays_empty() {
    let mut g = Digraph::new();
    g.add_vertex(PartyId::from("a"));
    let u = g.to_undirected();
    assert_eq!(u.arc_count(), 0);
}

#[test]
fn to_undirected_is_idempotent() {
    for seed in 0..10u64 {
        let g = seeded_random_graph(seed, 4 + (seed % 4) as usize, (seed % 5) as usize);
        let once = g.to_undirected();
        let twice = once.to_undirected();
        let edges = |d: &Digraph| -> BTreeSet<(PartyId, PartyId)> {
            d.arcs().map(|a| (a.from.clone(), a.to.clone())).collect()
        };
        assert_eq!(edges(&once), edges(&twice), "seed {seed}");
    }
}

// ---------------------------------------------------------------------------
// Solution subgraph
// ---------------------------------------------------------------------------

#[test]
fn all_false_assignment_gives_empty_subgraph() {
    let g = fig2_graph();
    let assignment: BTreeMap<ArcId, bool> =
        g.arc_ids().map(|a| (a.clone(), false)).collect();
    let s = g.solution_subgraph(&assignment);
    assert!(s.is_empty());
    assert_eq!(s.arc_count(), 0);
}

#[test]
fn fig2_pair_solution_subgraph_has_two_parties() {
    let g = fig2_graph();
    let mut assignment: BTreeMap<ArcId, bool> =
        g.arc_ids().map(|a| (a.clone(), false)).collect();
    assignment.insert(ArcId::from("a1"), true);
    assignment.insert(ArcId::from("b1"), true);
    let s = g.solution_subgraph(&assignment);
    assert_eq!(
        s.vertex_set(),
        &BTreeSet::from([PartyId::from("alice"), PartyId::from("bob")])
    );
    assert_eq!(s.arc_id_set(), BTreeSet::from([ArcId::from("a1"), ArcId::from("b1")]));
    assert!(s.is_strongly_connected());
}

#[test]
fn all_true_assignment_gives_whole_graph() {
    let g = fig2_graph();
    let assignment: BTreeMap<ArcId, bool> =
        g.arc_ids().map(|a| (a.clone(), true)).collect();
    let s = g.solution_subgraph(&assignment);
    assert_eq!(s.vertex_set(), g.vertex_set());
    assert_eq!(s.arc_count(), g.arc_count());
}
