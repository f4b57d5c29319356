//! Tseytin conversion of predicate expressions to CNF.
//!
//! Every connective becomes a definitional gate over a fresh variable, so
//! clause count stays linear in the circuit size. Cardinality sugar is
//! lowered through a sequential-counter circuit (unary counting registers),
//! not a binomial expansion, keeping "at most k of n" linear in n*k.
//! Satisfying assignments restricted to the arc variables coincide with the
//! models of the source expression.

use std::collections::BTreeMap;

use crate::graph::ArcId;
use crate::predicate::PredicateExpr;
use crate::sat::Formula;

#[derive(Debug, Clone)]
pub struct Cnf {
    pub formula: Formula,
    /// Arc variable indices (1-based); auxiliary Tseytin variables follow.
    pub var_map: BTreeMap<ArcId, i32>,
}

impl Cnf {
    pub fn arc_vars(&self) -> Vec<i32> {
        self.var_map.values().copied().collect()
    }
}

struct Builder {
    formula: Formula,
}

impl Builder {
    fn fresh(&mut self) -> i32 {
        self.formula.fresh_var()
    }

    /// g <-> AND(lits)
    fn and_gate(&mut self, lits: &[i32]) -> i32 {
        match lits {
            [] => self.const_true(),
            [l] => *l,
            _ => {
                let g = self.fresh();
                let mut long = vec![g];
                for &l in lits {
                    self.formula.add_clause(vec![-g, l]);
                    long.push(-l);
                }
                self.formula.add_clause(long);
                g
            }
        }
    }

    /// g <-> OR(lits)
    fn or_gate(&mut self, lits: &[i32]) -> i32 {
        match lits {
            [] => -self.const_true(),
            [l] => *l,
            _ => {
                let g = self.fresh();
                let mut long = vec![-g];
                for &l in lits {
                    self.formula.add_clause(vec![g, -l]);
                    long.push(l);
                }
                self.formula.add_clause(long);
                g
            }
        }
    }

    /// A variable pinned true by a unit clause.
    fn const_true(&mut self) -> i32 {
        let g = self.fresh();
        self.formula.add_clause(vec![g]);
        g
    }

    /// Sequential counter over `lits`: returns threshold literals s[j]
    /// (1-based j up to `max_count`) where s[j] <-> "at least j of lits".
    fn counter(&mut self, lits: &[i32], max_count: usize) -> Vec<i32> {
        let f = -self.const_true();
        let mut at_least: Vec<i32> = vec![f; max_count + 1];
        if max_count == 0 {
            return at_least;
        }
        for &lit in lits {
            let prev = at_least.clone();
            for j in (1..=max_count).rev() {
                // s'[j] = prev[j] | (lit & prev[j-1]); prev[0] is "at least
                // zero", i.e. true.
                let carry = if j == 1 {
                    lit
                } else {
                    self.and_gate(&[lit, prev[j - 1]])
                };
                at_least[j] = self.or_gate(&[prev[j], carry]);
            }
        }
        at_least
    }

    fn encode(&mut self, expr: &PredicateExpr, vars: &BTreeMap<ArcId, i32>) -> i32 {
        match expr {
            PredicateExpr::Const(true) => self.const_true(),
            PredicateExpr::Const(false) => -self.const_true(),
            PredicateExpr::Var(v) => *vars.get(v).expect("variable registered"),
            PredicateExpr::Not(e) => -self.encode(e, vars),
            PredicateExpr::And(es) => {
                let lits: Vec<i32> = es.iter().map(|e| self.encode(e, vars)).collect();
                self.and_gate(&lits)
            }
            PredicateExpr::Or(es) => {
                let lits: Vec<i32> = es.iter().map(|e| self.encode(e, vars)).collect();
                self.or_gate(&lits)
            }
            PredicateExpr::Implies(a, b) => {
                let la = self.encode(a, vars);
                let lb = self.encode(b, vars);
                self.or_gate(&[-la, lb])
            }
            PredicateExpr::AtMostK { arcs, k } => {
                let lits: Vec<i32> = arcs
                    .iter()
                    .map(|a| *vars.get(a).expect("variable registered"))
                    .collect();
                if *k >= lits.len() {
                    return self.const_true();
                }
                let thresholds = self.counter(&lits, k + 1);
                -thresholds[k + 1]
            }
            PredicateExpr::AtLeastK { arcs, k } => {
                let lits: Vec<i32> = arcs
                    .iter()
                    .map(|a| *vars.get(a).expect("variable registered"))
                    .collect();
                if *k == 0 {
                    return self.const_true();
                }
                if *k > lits.len() {
                    return -self.const_true();
                }
                let thresholds = self.counter(&lits, *k);
                thresholds[*k]
            }
        }
    }
}

/// Converts the expression to an equisatisfiable CNF whose models projected
/// to arc variables equal the expression's models over `universe`. Arcs in
/// the universe that the expression never mentions become unconstrained
/// variables, so enumeration stays total over the scenario's arcs.
pub fn to_cnf_over(expr: &PredicateExpr, universe: &[ArcId]) -> Cnf {
    let mut var_map = BTreeMap::new();
    let mut next = 0i32;
    for arc in universe {
        next += 1;
        var_map.insert(arc.clone(), next);
    }
    for arc in expr.variables() {
        var_map.entry(arc).or_insert_with(|| {
            next += 1;
            next
        });
    }
    let mut b = Builder {
        formula: Formula::new(next as usize),
    };
    let root = b.encode(expr, &var_map);
    b.formula.add_clause(vec![root]);
    Cnf {
        formula: b.formula,
        var_map,
    }
}

/// CNF over exactly the variables the expression mentions.
pub fn to_cnf(expr: &PredicateExpr) -> Cnf {
    let vars: Vec<ArcId> = expr.variables().into_iter().collect();
    to_cnf_over(expr, &vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::evaluate;
    use crate::sat::solve;

    /// Truth-table oracle: for every assignment of the expression's arc
    /// variables, CNF satisfiability under those fixed values must match
    /// direct evaluation.
    fn assert_projection_equal(expr: &PredicateExpr) {
        let vars: Vec<ArcId> = expr.variables().into_iter().collect();
        assert!(vars.len() <= 12, "oracle is exhaustive");
        let cnf = to_cnf(expr);
        for bits in 0u32..(1 << vars.len()) {
            let mut asg = BTreeMap::new();
            let mut fixed = cnf.formula.clone();
            for (i, v) in vars.iter().enumerate() {
                let value = bits & (1 << i) != 0;
                asg.insert(v.clone(), value);
                let var = cnf.var_map[v];
                fixed.add_clause(vec![if value { var } else { -var }]);
            }
            let expected = evaluate(expr, &asg).unwrap();
            let got = solve(&fixed, &[]).is_some();
            assert_eq!(got, expected, "assignment bits {bits:b} of {expr}");
        }
    }

    #[test]
    fn single_variable() {
        assert_projection_equal(&PredicateExpr::var("a"));
    }

    #[test]
    fn negated_conjunction() {
        let e = PredicateExpr::not(PredicateExpr::and(vec![
            PredicateExpr::var("a"),
            PredicateExpr::var("b"),
        ]));
        assert_projection_equal(&e);
    }

    #[test]
    fn implication_chain() {
        let e = PredicateExpr::implies(
            PredicateExpr::var("a"),
            PredicateExpr::implies(PredicateExpr::var("b"), PredicateExpr::var("c")),
        );
        assert_projection_equal(&e);
    }

    #[test]
    fn at_most_one_of_three() {
        let e = PredicateExpr::AtMostK {
            arcs: vec![ArcId::from("a"), ArcId::from("b"), ArcId::from("c")],
            k: 1,
        };
        assert_projection_equal(&e);
    }

    #[test]
    fn cardinality_nested_in_boolean_structure() {
        let e = PredicateExpr::and(vec![
            PredicateExpr::not(PredicateExpr::AtLeastK {
                arcs: vec![ArcId::from("a"), ArcId::from("b"), ArcId::from("c")],
                k: 2,
            }),
            PredicateExpr::or(vec![PredicateExpr::var("a"), PredicateExpr::var("d")]),
        ]);
        assert_projection_equal(&e);
    }

    #[test]
    fn cardinality_bounds_degenerate_cases() {
        for e in [
            PredicateExpr::AtMostK {
                arcs: vec![ArcId::from("a"), ArcId::from("b")],
                k: 0,
            },
            PredicateExpr::AtMostK {
                arcs: vec![ArcId::from("a"), ArcId::from("b")],
                k: 2,
            },
            PredicateExpr::AtLeastK {
                arcs: vec![ArcId::from("a"), ArcId::from("b")],
                k: 0,
            },
            PredicateExpr::AtLeastK {
                arcs: vec![ArcId::from("a"), ArcId::from("b")],
                k: 3,
            },
        ] {
            assert_projection_equal(&e);
        }
    }

    #[test]
    fn clause_count_linear_in_circuit_size() {
        // c = 6 covers the gate encodings used here.
        let exprs = vec![
            PredicateExpr::AtMostK {
                arcs: (0..8).map(|i| ArcId::new(format!("a{i}"))).collect(),
                k: 3,
            },
            PredicateExpr::and(
                (0..8)
                    .map(|i| {
                        PredicateExpr::implies(
                            PredicateExpr::var(format!("a{i}").as_str()),
                            PredicateExpr::var(format!("a{}", (i + 1) % 8).as_str()),
                        )
                    })
                    .collect(),
            ),
        ];
        for e in exprs {
            let cnf = to_cnf(&e);
            assert!(
                cnf.formula.clauses.len() <= 6 * e.circuit_size(),
                "{} clauses for size {}",
                cnf.formula.clauses.len(),
                e.circuit_size()
            );
        }
    }
}
