//! Bipartite factor graph of a CNF formula.
//!
//! Edge `e` is the `e`-th literal occurrence in the formula's flat clause
//! storage, so the edges of clause `a` are a contiguous range. Each variable
//! keeps its incident edges with the unnegated occurrences (∂ᵢ⁺) first and the
//! negated ones (∂ᵢ⁻) after.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::formula::CnfFormula;

#[derive(Clone, Debug)]
pub struct FactorGraph {
    num_vars: usize,
    clause_offsets: Vec<u32>,
    // variable << 1 | negated, one array so a clause's edges share cache lines
    edge_lit: Vec<u32>,
    edge_clause: Vec<u32>,
    var_offsets: Vec<usize>,
    // number of unnegated occurrences at the head of each variable's block
    var_pos: Vec<u32>,
    var_edges: Vec<u32>,
}

impl FactorGraph {
    pub fn new(f: &CnfFormula) -> Self {
        let n = f.num_vars();
        let lits = f.literals();
        let m = f.num_clauses();
        let mut clause_offsets = Vec::with_capacity(m + 1);
        let mut edge_clause = Vec::with_capacity(lits.len());
        clause_offsets.push(0);
        for a in 0..m {
            let r = f.clause_range(a);
            edge_clause.extend(core::iter::repeat_n(a as u32, r.len()));
            clause_offsets.push(r.end as u32);
        }

        let mut pos = vec![0u32; n];
        let mut deg = vec![0usize; n];
        for l in lits {
            deg[l.var()] += 1;
            if !l.is_negated() {
                pos[l.var()] += 1;
            }
        }
        let mut var_offsets = Vec::with_capacity(n + 1);
        var_offsets.push(0);
        for d in &deg {
            var_offsets.push(var_offsets.last().unwrap() + d);
        }
        let mut next_pos: Vec<usize> = var_offsets[..n].to_vec();
        let mut next_neg: Vec<usize> = (0..n).map(|i| var_offsets[i] + pos[i] as usize).collect();
        let mut var_edges = vec![0u32; lits.len()];
        for (e, l) in lits.iter().enumerate() {
            let slot = if l.is_negated() {
                &mut next_neg[l.var()]
            } else {
                &mut next_pos[l.var()]
            };
            var_edges[*slot] = e as u32;
            *slot += 1;
        }

        FactorGraph {
            num_vars: n,
            clause_offsets,
            edge_lit: lits
                .iter()
                .map(|l| (l.var() as u32) << 1 | l.is_negated() as u32)
                .collect(),
            edge_clause,
            var_offsets,
            var_pos: pos,
            var_edges,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clause_offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.edge_lit.len()
    }

    /// Edges of clause `a` (∂ₐ).
    #[inline]
    pub fn clause_edges(&self, a: usize) -> Range<usize> {
        self.clause_offsets[a] as usize..self.clause_offsets[a + 1] as usize
    }

    /// Hints that clause `a`'s edge range will be read soon.
    #[inline]
    pub(crate) fn prefetch_clause(&self, a: usize) {
        crate::prefetch::hint(&self.clause_offsets[a]);
    }

    /// Hints that edge `e`'s literal will be read soon.
    #[inline]
    pub(crate) fn prefetch_edge(&self, e: usize) {
        if let Some(x) = self.edge_lit.get(e) {
            crate::prefetch::hint(x);
        }
    }

    #[inline]
    pub fn edge_var(&self, e: usize) -> usize {
        (self.edge_lit[e] >> 1) as usize
    }

    #[inline]
    pub fn edge_negated(&self, e: usize) -> bool {
        self.edge_lit[e] & 1 == 1
    }

    #[inline]
    pub fn edge_clause(&self, e: usize) -> usize {
        self.edge_clause[e] as usize
    }

    /// All edges incident to variable `i` (∂ᵢ).
    #[inline]
    pub fn var_edges(&self, i: usize) -> &[u32] {
        &self.var_edges[self.var_offsets[i]..self.var_offsets[i + 1]]
    }

    /// Edges where `i` occurs unnegated (∂ᵢ⁺).
    #[inline]
    pub fn positive_edges(&self, i: usize) -> &[u32] {
        let s = self.var_offsets[i];
        &self.var_edges[s..s + self.var_pos[i] as usize]
    }

    /// Edges where `i` occurs negated (∂ᵢ⁻).
    #[inline]
    pub fn negative_edges(&self, i: usize) -> &[u32] {
        let s = self.var_offsets[i] + self.var_pos[i] as usize;
        &self.var_edges[s..self.var_offsets[i + 1]]
    }

    /// n⁺ᵢ
    #[inline]
    pub fn n_plus(&self, i: usize) -> usize {
        self.var_pos[i] as usize
    }

    /// n⁻ᵢ
    #[inline]
    pub fn n_minus(&self, i: usize) -> usize {
        self.degree(i) - self.n_plus(i)
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.var_offsets[i + 1] - self.var_offsets[i]
    }
}
