//! A small DPLL SAT solver.

use crate::error::{Error, Result};

/// Conjunction of clauses over variables `1..=num_vars`; literal `+v` is
/// "v true", `-v` is "v false".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        let mut cnf = Cnf { num_vars, clauses: Vec::with_capacity(clauses.len()) };
        for c in clauses {
            cnf.add_clause(c)?;
        }
        Ok(cnf)
    }

    pub fn add_clause(&mut self, clause: Vec<i32>) -> Result<()> {
        if clause.is_empty() {
            return Err(Error::Invalid("empty clause".into()));
        }
        if let Some(l) = clause.iter().find(|l| **l == 0 || l.unsigned_abs() as usize > self.num_vars) {
            return Err(Error::Invalid(format!("literal {l} out of range")));
        }
        self.clauses.push(clause);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn literal_count(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }

    /// Whether `assignment` (index `v − 1` for variable `v`) satisfies every clause.
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| lit_value(l, assignment[l.unsigned_abs() as usize - 1])))
    }
}

fn lit_value(l: i32, v: bool) -> bool {
    if l > 0 {
        v
    } else {
        !v
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Clause {
    Satisfied,
    Conflict,
    Unit(i32),
    Open,
}

fn inspect(clause: &[i32], assign: &[Option<bool>]) -> Clause {
    let mut free = None;
    let mut nfree = 0;
    for &l in clause {
        match assign[l.unsigned_abs() as usize - 1] {
            Some(v) if lit_value(l, v) => return Clause::Satisfied,
            Some(_) => {}
            None => {
                nfree += 1;
                free = Some(l);
            }
        }
    }
    match (nfree, free) {
        (0, _) => Clause::Conflict,
        (1, Some(l)) => Clause::Unit(l),
        _ => Clause::Open,
    }
}

fn assign_lit(assign: &mut [Option<bool>], l: i32) {
    assign[l.unsigned_abs() as usize - 1] = Some(l > 0);
}

/// Unit propagation and pure-literal elimination to a fixed point.
/// Returns false on conflict.
fn simplify(cnf: &Cnf, assign: &mut [Option<bool>]) -> bool {
    loop {
        let mut changed = false;
        for c in &cnf.clauses {
            match inspect(c, assign) {
                Clause::Conflict => return false,
                Clause::Unit(l) => {
                    assign_lit(assign, l);
                    changed = true;
                }
                _ => {}
            }
        }
        if changed {
            continue;
        }
        // polarity seen in open clauses: bit 0 positive, bit 1 negative
        let mut polarity = vec![0u8; cnf.num_vars];
        for c in &cnf.clauses {
            if inspect(c, assign) == Clause::Satisfied {
                continue;
            }
            for &l in c {
                let v = l.unsigned_abs() as usize - 1;
                if assign[v].is_none() {
                    polarity[v] |= if l > 0 { 1 } else { 2 };
                }
            }
        }
        for (v, p) in polarity.iter().enumerate() {
            if *p == 1 || *p == 2 {
                assign[v] = Some(*p == 1);
                changed = true;
            }
        }
        if !changed {
            return true;
        }
    }
}

fn dpll(cnf: &Cnf, assign: &mut Vec<Option<bool>>) -> bool {
    if !simplify(cnf, assign) {
        return false;
    }
    let open: Vec<bool> = {
        let mut used = vec![false; cnf.num_vars];
        for c in &cnf.clauses {
            if inspect(c, assign) != Clause::Satisfied {
                for &l in c {
                    used[l.unsigned_abs() as usize - 1] = true;
                }
            }
        }
        used
    };
    let Some(v) = (0..cnf.num_vars).find(|&v| assign[v].is_none() && open[v]) else {
        return true;
    };
    for value in [true, false] {
        let mut trial = assign.clone();
        trial[v] = Some(value);
        if dpll(cnf, &mut trial) {
            *assign = trial;
            return true;
        }
    }
    false
}

/// Returns a satisfying assignment (index `v − 1` for variable `v`) or `None` if unsatisfiable.
///
/// Branches on the lowest unassigned variable, true first. Variables left
/// unconstrained are set true.
pub fn sat_solve(cnf: &Cnf) -> Option<Vec<bool>> {
    let mut assign = vec![None; cnf.num_vars];
    if dpll(cnf, &mut assign) {
        Some(assign.into_iter().map(|v| v.unwrap_or(true)).collect())
    } else {
        None
    }
}
