//! Predicate AST for party requirements.
//!
//! A boolean variable sits on every arc: true means the proposed transfer
//! happens. Each party declares an income predicate per outgoing arc plus a
//! constraint over its outgoing payments; safety and liveness formulas are
//! assembled from those pieces and evaluated against arc assignments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ArcId, AssetId, Digraph, PartyId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredicateExpr {
    Const(bool),
    Var(ArcId),
    Not(Box<PredicateExpr>),
    And(Vec<PredicateExpr>),
    Or(Vec<PredicateExpr>),
    Implies(Box<PredicateExpr>, Box<PredicateExpr>),
    /// At most `k` of the listed arcs are true.
    AtMostK { arcs: Vec<ArcId>, k: usize },
    /// At least `k` of the listed arcs are true.
    AtLeastK { arcs: Vec<ArcId>, k: usize },
}

impl PredicateExpr {
    pub fn var(id: impl Into<ArcId>) -> Self {
        PredicateExpr::Var(id.into())
    }

    pub fn not(e: PredicateExpr) -> Self {
        PredicateExpr::Not(Box::new(e))
    }

    pub fn implies(a: PredicateExpr, b: PredicateExpr) -> Self {
        PredicateExpr::Implies(Box::new(a), Box::new(b))
    }

    pub fn and(mut es: Vec<PredicateExpr>) -> Self {
        match es.len() {
            0 => PredicateExpr::Const(true),
            1 => es.remove(0),
            _ => PredicateExpr::And(es),
        }
    }

    pub fn or(mut es: Vec<PredicateExpr>) -> Self {
        match es.len() {
            0 => PredicateExpr::Const(false),
            1 => es.remove(0),
            _ => PredicateExpr::Or(es),
        }
    }

    /// All arc variables referenced by the expression.
    pub fn variables(&self) -> BTreeSet<ArcId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<ArcId>) {
        match self {
            PredicateExpr::Const(_) => {}
            PredicateExpr::Var(v) => {
                out.insert(v.clone());
            }
            PredicateExpr::Not(e) => e.collect_vars(out),
            PredicateExpr::And(es) | PredicateExpr::Or(es) => {
                for e in es {
                    e.collect_vars(out);
                }
            }
            PredicateExpr::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            PredicateExpr::AtMostK { arcs, .. } | PredicateExpr::AtLeastK { arcs, .. } => {
                out.extend(arcs.iter().cloned());
            }
        }
    }

    /// Node count with cardinality nodes weighted by their counter-circuit
    /// size; the CNF conversion emits a number of clauses linear in this.
    pub fn circuit_size(&self) -> usize {
        match self {
            PredicateExpr::Const(_) | PredicateExpr::Var(_) => 1,
            PredicateExpr::Not(e) => 1 + e.circuit_size(),
            PredicateExpr::And(es) | PredicateExpr::Or(es) => {
                1 + es.iter().map(|e| e.circuit_size()).sum::<usize>()
            }
            PredicateExpr::Implies(a, b) => 1 + a.circuit_size() + b.circuit_size(),
            PredicateExpr::AtMostK { arcs, k } | PredicateExpr::AtLeastK { arcs, k } => {
                (arcs.len() + 1) * (k + 2) + 1
            }
        }
    }
}

impl fmt::Display for PredicateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateExpr::Const(b) => write!(f, "{b}"),
            PredicateExpr::Var(v) => write!(f, "arc({v})"),
            PredicateExpr::Not(e) => write!(f, "!{e}"),
            PredicateExpr::And(es) => {
                write!(f, "(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            PredicateExpr::Or(es) => {
                write!(f, "(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            PredicateExpr::Implies(a, b) => write!(f, "({a} => {b})"),
            PredicateExpr::AtMostK { arcs, k } => {
                write!(f, "atmost({k};")?;
                for (i, a) in arcs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            PredicateExpr::AtLeastK { arcs, k } => {
                write!(f, "atleast({k};")?;
                for (i, a) in arcs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredicateError {
    #[error("assignment is missing arc {0}")]
    MissingAssignment(ArcId),
    #[error("income predicate of {party} for arc {outgoing} references arc {referenced}, which is not incident to {party}")]
    ForeignArcInIncome {
        party: PartyId,
        outgoing: ArcId,
        referenced: ArcId,
    },
    #[error("outgoing constraint of {party} references arc {referenced}, which is not an outgoing arc of {party}")]
    ForeignArcInOutgoing { party: PartyId, referenced: ArcId },
    #[error("income predicate key {arc} is not an outgoing arc of {party}")]
    NotAnOutgoingArc { party: PartyId, arc: ArcId },
}

/// A party's declared requirements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartySpec {
    pub party: PartyId,
    /// Income predicate per outgoing arc: if the party pays along the key
    /// arc, the predicate states what it must receive in return.
    pub income_preds: BTreeMap<ArcId, PredicateExpr>,
    /// Constraint over the party's outgoing payments (overpay guard).
    pub outgoing_constraint: PredicateExpr,
    /// Outgoing arcs that share one asset (ProtocolB reuse); at most one arc
    /// per group may complete.
    pub same_asset_groups: Vec<(AssetId, BTreeSet<ArcId>)>,
}

impl PartySpec {
    pub fn new(party: PartyId) -> Self {
        PartySpec {
            party,
            income_preds: BTreeMap::new(),
            outgoing_constraint: PredicateExpr::Const(true),
            same_asset_groups: Vec::new(),
        }
    }

    fn validate(&self, g: &Digraph) -> Result<(), PredicateError> {
        let outgoing: BTreeSet<ArcId> = g.outgoing(&self.party).map(|a| a.id.clone()).collect();
        let incident: BTreeSet<ArcId> = g
            .outgoing(&self.party)
            .chain(g.incoming(&self.party))
            .map(|a| a.id.clone())
            .collect();
        for (arc, pred) in &self.income_preds {
            if !outgoing.contains(arc) {
                return Err(PredicateError::NotAnOutgoingArc {
                    party: self.party.clone(),
                    arc: arc.clone(),
                });
            }
            for v in pred.variables() {
                if !incident.contains(&v) {
                    return Err(PredicateError::ForeignArcInIncome {
                        party: self.party.clone(),
                        outgoing: arc.clone(),
                        referenced: v,
                    });
                }
            }
        }
        for v in self.outgoing_constraint.variables() {
            if !outgoing.contains(&v) {
                return Err(PredicateError::ForeignArcInOutgoing {
                    party: self.party.clone(),
                    referenced: v,
                });
            }
        }
        Ok(())
    }
}

/// S_x: for every outgoing arc, paying it implies the matching income
/// predicate holds, conjoined with the outgoing constraint. Satisfied by the
/// all-false assignment.
pub fn build_safety(spec: &PartySpec, g: &Digraph) -> Result<PredicateExpr, PredicateError> {
    spec.validate(g)?;
    let mut clauses: Vec<PredicateExpr> = spec
        .income_preds
        .iter()
        .map(|(arc, income)| {
            PredicateExpr::implies(PredicateExpr::Var(arc.clone()), income.clone())
        })
        .collect();
    if spec.outgoing_constraint != PredicateExpr::Const(true) {
        clauses.push(spec.outgoing_constraint.clone());
    }
    Ok(PredicateExpr::and(clauses))
}

/// L_x: safety plus at least one income predicate holding.
pub fn build_liveness(spec: &PartySpec, g: &Digraph) -> Result<PredicateExpr, PredicateError> {
    let safety = build_safety(spec, g)?;
    let incomes: Vec<PredicateExpr> = spec.income_preds.values().cloned().collect();
    Ok(PredicateExpr::and(vec![safety, PredicateExpr::or(incomes)]))
}

/// r_x: per same-asset group, at most one arc completes (ProtocolB).
pub fn build_reuse_restriction(spec: &PartySpec) -> PredicateExpr {
    let clauses: Vec<PredicateExpr> = spec
        .same_asset_groups
        .iter()
        .filter(|(_, arcs)| arcs.len() > 1)
        .map(|(_, arcs)| PredicateExpr::AtMostK {
            arcs: arcs.iter().cloned().collect(),
            k: 1,
        })
        .collect();
    PredicateExpr::and(clauses)
}

/// Standard boolean semantics; cardinality nodes count true arcs.
pub fn evaluate(
    expr: &PredicateExpr,
    assignment: &BTreeMap<ArcId, bool>,
) -> Result<bool, PredicateError> {
    Ok(match expr {
        PredicateExpr::Const(b) => *b,
        PredicateExpr::Var(v) => *assignment
            .get(v)
            .ok_or_else(|| PredicateError::MissingAssignment(v.clone()))?,
        PredicateExpr::Not(e) => !evaluate(e, assignment)?,
        PredicateExpr::And(es) => {
            let mut all = true;
            for e in es {
                all &= evaluate(e, assignment)?;
            }
            all
        }
        PredicateExpr::Or(es) => {
            let mut any = false;
            for e in es {
                any |= evaluate(e, assignment)?;
            }
            any
        }
        PredicateExpr::Implies(a, b) => !evaluate(a, assignment)? || evaluate(b, assignment)?,
        PredicateExpr::AtMostK { arcs, k } => count_true(arcs, assignment)? <= *k,
        PredicateExpr::AtLeastK { arcs, k } => count_true(arcs, assignment)? >= *k,
    })
}

fn count_true(
    arcs: &[ArcId],
    assignment: &BTreeMap<ArcId, bool>,
) -> Result<usize, PredicateError> {
    let mut n = 0;
    for a in arcs {
        if *assignment
            .get(a)
            .ok_or_else(|| PredicateError::MissingAssignment(a.clone()))?
        {
            n += 1;
        }
    }
    Ok(n)
}

/// The conjunction over all parties' predicates, phi(P).
pub fn conjoin_all(preds: impl IntoIterator<Item = PredicateExpr>) -> PredicateExpr {
    PredicateExpr::and(preds.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TransferArc;

    fn example1_graph() -> Digraph {
        let mut g = Digraph::new();
        for p in ["alice", "bob", "carol"] {
            g.add_vertex(PartyId::from(p));
        }
        for (id, from, to, asset) in [
            ("ac", "alice", "carol", "xcoin"),
            ("cb", "carol", "bob", "ycoin"),
            ("ba", "bob", "alice", "nft"),
        ] {
            g.add_arc(TransferArc {
                id: ArcId::from(id),
                from: PartyId::from(from),
                to: PartyId::from(to),
                asset: AssetId::from(asset),
            })
            .unwrap();
        }
        g
    }

    #[test]
    fn safety_of_example1_alice_is_single_implication() {
        let g = example1_graph();
        let mut spec = PartySpec::new(PartyId::from("alice"));
        spec.income_preds
            .insert(ArcId::from("ac"), PredicateExpr::var("ba"));
        let s = build_safety(&spec, &g).unwrap();
        assert_eq!(
            s,
            PredicateExpr::implies(PredicateExpr::var("ac"), PredicateExpr::var("ba"))
        );
    }

    #[test]
    fn safety_with_no_outgoing_arcs_is_true() {
        let g = example1_graph();
        let spec = PartySpec::new(PartyId::from("zoe"));
        assert_eq!(build_safety(&spec, &g).unwrap(), PredicateExpr::Const(true));
    }

    #[test]
    fn income_predicate_referencing_foreign_arc_is_rejected() {
        let g = example1_graph();
        let mut spec = PartySpec::new(PartyId::from("alice"));
        // "cb" is carol->bob: not incident to alice.
        spec.income_preds
            .insert(ArcId::from("ac"), PredicateExpr::var("cb"));
        assert!(matches!(
            build_safety(&spec, &g),
            Err(PredicateError::ForeignArcInIncome { .. })
        ));
    }

    #[test]
    fn liveness_is_safety_and_some_income() {
        let g = example1_graph();
        let mut spec = PartySpec::new(PartyId::from("alice"));
        spec.income_preds
            .insert(ArcId::from("ac"), PredicateExpr::var("ba"));
        let l = build_liveness(&spec, &g).unwrap();
        let mut all_false = BTreeMap::new();
        for a in ["ac", "cb", "ba"] {
            all_false.insert(ArcId::from(a), false);
        }
        // All-false satisfies safety but not liveness.
        assert!(evaluate(&build_safety(&spec, &g).unwrap(), &all_false).unwrap());
        assert!(!evaluate(&l, &all_false).unwrap());
        let mut both = all_false.clone();
        both.insert(ArcId::from("ba"), true);
        assert!(evaluate(&l, &both).unwrap());
    }

    #[test]
    fn reuse_restriction_matches_pairwise_negation_truth_table() {
        let mut spec = PartySpec::new(PartyId::from("alice"));
        let group: BTreeSet<ArcId> = ["o1", "o2", "o3"].iter().map(|s| ArcId::from(*s)).collect();
        spec.same_asset_groups
            .push((AssetId::from("token"), group));
        let r = build_reuse_restriction(&spec);
        // Oracle: conjunction of pairwise negations.
        for bits in 0u8..8 {
            let mut asg = BTreeMap::new();
            for (i, o) in ["o1", "o2", "o3"].iter().enumerate() {
                asg.insert(ArcId::from(*o), bits & (1 << i) != 0);
            }
            let expected = bits.count_ones() <= 1;
            assert_eq!(evaluate(&r, &asg).unwrap(), expected, "bits={bits:03b}");
        }
    }

    #[test]
    fn empty_reuse_groups_are_constant_true() {
        let spec = PartySpec::new(PartyId::from("alice"));
        assert_eq!(build_reuse_restriction(&spec), PredicateExpr::Const(true));
    }

    #[test]
    fn missing_variable_is_an_error() {
        let e = PredicateExpr::var("ac");
        let asg = BTreeMap::new();
        assert_eq!(
            evaluate(&e, &asg),
            Err(PredicateError::MissingAssignment(ArcId::from("ac")))
        );
    }

    #[test]
    fn conjoin_all_of_empty_set_is_true() {
        assert_eq!(conjoin_all(Vec::new()), PredicateExpr::Const(true));
        let single = PredicateExpr::var("ac");
        assert_eq!(conjoin_all(vec![single.clone()]), single);
    }
}
