//! CNF formulas, the random MAX-E-3-SAT ensemble and assignment evaluation.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

/// A possibly negated occurrence of a variable. Variables are 0-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(u32);

impl Literal {
    pub fn new(var: usize, negated: bool) -> Self {
        debug_assert!(var < (u32::MAX >> 1) as usize);
        Literal(((var as u32) << 1) | negated as u32)
    }

    pub fn positive(var: usize) -> Self {
        Self::new(var, false)
    }

    pub fn negative(var: usize) -> Self {
        Self::new(var, true)
    }

    /// Converts a signed 1-based DIMACS integer. Returns `None` for 0.
    pub fn from_dimacs(code: i64) -> Option<Self> {
        if code == 0 {
            return None;
        }
        Some(Self::new((code.unsigned_abs() - 1) as usize, code < 0))
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    #[inline]
    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Whether this literal is true when its variable takes `value`.
    #[inline]
    pub fn satisfied_by(self, value: bool) -> bool {
        value != self.is_negated()
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Clause list over `num_vars` Boolean variables, stored flat.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CnfFormula {
    num_vars: usize,
    literals: Vec<Literal>,
    // clause `a` is literals[offsets[a]..offsets[a + 1]]
    offsets: Vec<usize>,
}

impl CnfFormula {
    /// Builds a formula, checking index ranges and non-empty clauses. With
    /// `strict_arity = Some(k)` every clause must also contain exactly `k`
    /// distinct variables.
    pub fn new(
        num_vars: usize,
        clauses: impl IntoIterator<Item = Vec<Literal>>,
        strict_arity: Option<usize>,
    ) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::NoVariables);
        }
        let mut literals = Vec::new();
        let mut offsets = Vec::from([0]);
        for (a, clause) in clauses.into_iter().enumerate() {
            if clause.is_empty() {
                return Err(Error::EmptyClause { clause: a });
            }
            for lit in &clause {
                if lit.var() >= num_vars {
                    return Err(Error::VariableOutOfRange {
                        var: lit.var(),
                        num_vars,
                    });
                }
            }
            if let Some(k) = strict_arity {
                if clause.len() != k {
                    return Err(Error::ClauseArity {
                        clause: a,
                        len: clause.len(),
                        expected: k,
                    });
                }
                for (p, lit) in clause.iter().enumerate() {
                    if clause[..p].iter().any(|l| l.var() == lit.var()) {
                        return Err(Error::DuplicateVariable {
                            clause: a,
                            var: lit.var(),
                        });
                    }
                }
            }
            literals.extend_from_slice(&clause);
            offsets.push(literals.len());
        }
        if offsets.len() == 1 {
            return Err(Error::NoClauses);
        }
        Ok(CnfFormula {
            num_vars,
            literals,
            offsets,
        })
    }

    /// Formula without the `N ≥ 1`, `M ≥ 1` guards, used for residual
    /// formulas after decimation which may be empty.
    pub(crate) fn from_parts(num_vars: usize, literals: Vec<Literal>, offsets: Vec<usize>) -> Self {
        debug_assert_eq!(offsets.first(), Some(&0));
        debug_assert_eq!(offsets.last(), Some(&literals.len()));
        CnfFormula {
            num_vars,
            literals,
            offsets,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Total number of literal occurrences, i.e. factor-graph edges.
    pub fn num_literals(&self) -> usize {
        self.literals.len()
    }

    pub fn clause(&self, a: usize) -> &[Literal] {
        &self.literals[self.offsets[a]..self.offsets[a + 1]]
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = &[Literal]> + '_ {
        self.offsets.windows(2).map(move |w| &self.literals[w[0]..w[1]])
    }

    pub(crate) fn clause_range(&self, a: usize) -> core::ops::Range<usize> {
        self.offsets[a]..self.offsets[a + 1]
    }

    pub(crate) fn literals(&self) -> &[Literal] {
        &self.literals
    }

    /// Clause density M/N.
    pub fn alpha(&self) -> f64 {
        self.num_clauses() as f64 / self.num_vars as f64
    }

    /// Satisfied-clause count and ratio for `assignment`.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<Evaluation> {
        self.check_len(assignment)?;
        let satisfied = self
            .clauses()
            .filter(|c| clause_satisfied(c, assignment.values()))
            .count();
        Ok(Evaluation::new(satisfied, self.num_clauses()))
    }

    /// Number of clauses falsified by `assignment`.
    pub fn unsat_clause_count(&self, assignment: &Assignment) -> Result<usize> {
        self.evaluate(assignment).map(|e| e.unsatisfied())
    }

    pub(crate) fn check_len(&self, assignment: &Assignment) -> Result<()> {
        if assignment.len() != self.num_vars {
            return Err(Error::LengthMismatch {
                expected: self.num_vars,
                got: assignment.len(),
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn clause_satisfied(clause: &[Literal], values: &[bool]) -> bool {
    clause.iter().any(|l| l.satisfied_by(values[l.var()]))
}

/// Result of evaluating an assignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub satisfied: usize,
    pub total: usize,
    /// Satisfied fraction ρ. An empty formula counts as fully satisfied.
    pub rho: f64,
}

impl Evaluation {
    pub fn new(satisfied: usize, total: usize) -> Self {
        let rho = if total == 0 {
            1.0
        } else {
            satisfied as f64 / total as f64
        };
        Evaluation { satisfied, total, rho }
    }

    pub fn unsatisfied(&self) -> usize {
        self.total - self.satisfied
    }

    pub fn one_minus_rho(&self) -> f64 {
        1.0 - self.rho
    }
}

/// Truth values for variables `0..N`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment(values)
    }

    pub fn all_false(n: usize) -> Self {
        Assignment(alloc::vec![false; n])
    }

    pub fn random(n: usize, rng: &mut impl rand::Rng) -> Self {
        Assignment((0..n).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: usize) -> bool {
        self.0[var]
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.0[var] = value;
    }

    pub fn flip(&mut self, var: usize) {
        self.0[var] = !self.0[var];
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }
}

impl From<Vec<bool>> for Assignment {
    fn from(v: Vec<bool>) -> Self {
        Assignment(v)
    }
}

/// Samples a random k-SAT formula with `round(alpha * n)` clauses. Each
/// clause draws `k` distinct variables uniformly and negates each one with
/// probability 1/2; clauses are drawn independently, so repeats are possible.
pub fn generate_random_ksat(n: usize, k: usize, alpha: f64, seed: u64) -> Result<CnfFormula> {
    if k == 0 {
        return Err(Error::InvalidConfig("clause arity must be positive"));
    }
    if n < k.max(3) {
        return Err(Error::TooFewVariables(n));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::EmptyEnsemble(alpha));
    }
    let m = libm::round(alpha * n as f64) as usize;
    if m == 0 {
        return Err(Error::EmptyEnsemble(alpha));
    }
    let mut rng = rng::rng_from(seed);
    let mut literals = Vec::with_capacity(m * k);
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0);
    for _ in 0..m {
        let start = literals.len();
        while literals.len() - start < k {
            let var = rng.gen_range(0..n);
            if literals[start..].iter().any(|l: &Literal| l.var() == var) {
                continue;
            }
            literals.push(Literal::new(var, rng.gen::<bool>()));
        }
        offsets.push(literals.len());
    }
    Ok(CnfFormula::from_parts(n, literals, offsets))
}

/// The random MAX-E-3-SAT ensemble.
pub fn generate_random_3sat(n: usize, alpha: f64, seed: u64) -> Result<CnfFormula> {
    generate_random_ksat(n, 3, alpha, seed)
}
