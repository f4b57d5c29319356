//! Minimal DPLL solver used for all-SAT enumeration with blocking clauses.
//!
//! Variables are positive `i32` indices, literals signed. Branching follows
//! a caller-supplied priority list (the arc variables, ascending) and tries
//! false before true, so enumeration order is the lexicographic order of arc
//! assignments. The solver is restarted after each blocking clause; desk
//! scale (<= 14 arc variables) keeps that cheap.

/// A CNF formula plus bookkeeping for fresh variables.
#[derive(Debug, Clone, Default)]
pub struct Formula {
    pub clauses: Vec<Vec<i32>>,
    pub num_vars: usize,
}

impl Formula {
    pub fn new(num_vars: usize) -> Self {
        Formula {
            clauses: Vec::new(),
            num_vars,
        }
    }

    pub fn add_clause(&mut self, clause: Vec<i32>) {
        debug_assert!(clause.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= self.num_vars));
        self.clauses.push(clause);
    }

    pub fn fresh_var(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Val {
    Unset,
    True,
    False,
}

/// Search state for one DPLL run.
struct Search<'f> {
    formula: &'f Formula,
    assign: Vec<Val>,
    trail: Vec<i32>,
}

impl<'f> Search<'f> {
    fn value(&self, lit: i32) -> Val {
        let v = self.assign[lit.unsigned_abs() as usize];
        match (v, lit > 0) {
            (Val::Unset, _) => Val::Unset,
            (Val::True, true) | (Val::False, false) => Val::True,
            _ => Val::False,
        }
    }

    fn set(&mut self, lit: i32) {
        self.assign[lit.unsigned_abs() as usize] = if lit > 0 { Val::True } else { Val::False };
        self.trail.push(lit);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let lit = self.trail.pop().unwrap();
            self.assign[lit.unsigned_abs() as usize] = Val::Unset;
        }
    }

    /// Repeated unit propagation. Returns false on conflict.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for clause in &self.formula.clauses {
                let mut unassigned: Option<i32> = None;
                let mut n_unassigned = 0;
                let mut satisfied = false;
                for &lit in clause {
                    match self.value(lit) {
                        Val::True => {
                            satisfied = true;
                            break;
                        }
                        Val::Unset => {
                            n_unassigned += 1;
                            unassigned = Some(lit);
                        }
                        Val::False => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match n_unassigned {
                    0 => return false,
                    1 => {
                        self.set(unassigned.unwrap());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn all_clauses_satisfied(&self) -> bool {
        self.formula
            .clauses
            .iter()
            .all(|c| c.iter().any(|&l| self.value(l) == Val::True))
    }

    fn dpll(&mut self, priority: &[i32]) -> bool {
        if !self.propagate() {
            return false;
        }
        // Branch until every priority variable is decided, even if the
        // formula is already satisfied, so models are total over arc vars.
        let next = priority
            .iter()
            .copied()
            .find(|&v| self.assign[v as usize] == Val::Unset);
        let branch_var = match next {
            Some(v) => v,
            None => {
                if self.all_clauses_satisfied() {
                    return true;
                }
                match (1..=self.formula.num_vars as i32)
                    .find(|&v| self.assign[v as usize] == Val::Unset)
                {
                    Some(v) => v,
                    None => return false,
                }
            }
        };
        for lit in [-branch_var, branch_var] {
            let mark = self.trail.len();
            self.set(lit);
            if self.dpll(priority) {
                return true;
            }
            self.undo_to(mark);
        }
        false
    }
}

/// Finds one model, branching on `priority` variables first (ascending,
/// false before true). Returns per-variable values indexed 1..=num_vars;
/// variables never touched by the search come back as `false`.
pub fn solve(formula: &Formula, priority: &[i32]) -> Option<Vec<bool>> {
    let mut search = Search {
        formula,
        assign: vec![Val::Unset; formula.num_vars + 1],
        trail: Vec::new(),
    };
    if search.dpll(priority) {
        Some(
            (1..=formula.num_vars)
                .map(|v| search.assign[v] == Val::True)
                .collect(),
        )
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsat_empty_clause() {
        let mut f = Formula::new(1);
        f.add_clause(vec![]);
        assert!(solve(&f, &[1]).is_none());
    }

    #[test]
    fn simple_model_prefers_false() {
        // (x1 | x2): lexicographic first model is x1=false, x2=true.
        let mut f = Formula::new(2);
        f.add_clause(vec![1, 2]);
        let m = solve(&f, &[1, 2]).unwrap();
        assert_eq!(m, vec![false, true]);
    }

    #[test]
    fn unit_propagation_resolves_chains() {
        // x1, x1 -> x2, x2 -> x3.
        let mut f = Formula::new(3);
        f.add_clause(vec![1]);
        f.add_clause(vec![-1, 2]);
        f.add_clause(vec![-2, 3]);
        let m = solve(&f, &[1, 2, 3]).unwrap();
        assert_eq!(m, vec![true, true, true]);
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut f = Formula::new(1);
        f.add_clause(vec![1]);
        f.add_clause(vec![-1]);
        assert!(solve(&f, &[1]).is_none());
    }
}
