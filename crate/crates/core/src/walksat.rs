//! MaxWalkSat local search.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::formula::{Assignment, CnfFormula};
use crate::graph::FactorGraph;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkSatConfig {
    /// Flips per restart.
    pub cutoff: u64,
    /// Probability of a random-walk move instead of a greedy one.
    pub noise: f64,
    pub seed: u64,
    pub restarts: u32,
}

impl Default for WalkSatConfig {
    fn default() -> Self {
        WalkSatConfig {
            cutoff: 100_000,
            noise: 0.5,
            seed: 0,
            restarts: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkSatResult {
    pub best_assignment: Assignment,
    pub best_unsat: usize,
    pub flips_used: u64,
}

/// Incrementally maintained search state over a fixed formula.
pub(crate) struct WalkState<'f> {
    f: &'f CnfFormula,
    g: &'f FactorGraph,
    values: Vec<bool>,
    num_true: Vec<u32>,
    unsat: Vec<u32>,
    // position of each clause in `unsat`, u32::MAX when satisfied
    unsat_pos: Vec<u32>,
}

const NOT_LISTED: u32 = u32::MAX;

impl<'f> WalkState<'f> {
    pub(crate) fn new(f: &'f CnfFormula, g: &'f FactorGraph, values: Vec<bool>) -> Self {
        let m = f.num_clauses();
        let mut s = WalkState {
            f,
            g,
            values,
            num_true: vec![0; m],
            unsat: Vec::new(),
            unsat_pos: vec![NOT_LISTED; m],
        };
        for a in 0..m {
            let t = f.clause(a).iter().filter(|l| l.satisfied_by(s.values[l.var()])).count() as u32;
            s.num_true[a] = t;
            if t == 0 {
                s.push_unsat(a);
            }
        }
        s
    }

    fn push_unsat(&mut self, a: usize) {
        self.unsat_pos[a] = self.unsat.len() as u32;
        self.unsat.push(a as u32);
    }

    fn remove_unsat(&mut self, a: usize) {
        let pos = self.unsat_pos[a] as usize;
        let last = self.unsat.pop().unwrap();
        if last as usize != a {
            self.unsat[pos] = last;
            self.unsat_pos[last as usize] = pos as u32;
        }
        self.unsat_pos[a] = NOT_LISTED;
    }

    pub(crate) fn unsat_count(&self) -> usize {
        self.unsat.len()
    }

    pub(crate) fn flip(&mut self, v: usize) {
        self.values[v] = !self.values[v];
        let val = self.values[v];
        for &e in self.g.var_edges(v) {
            let e = e as usize;
            let a = self.g.edge_clause(e);
            if val != self.g.edge_negated(e) {
                self.num_true[a] += 1;
                if self.num_true[a] == 1 {
                    self.remove_unsat(a);
                }
            } else {
                self.num_true[a] -= 1;
                if self.num_true[a] == 0 {
                    self.push_unsat(a);
                }
            }
        }
    }

    /// Clauses that flipping `v` would leave with no true literal.
    fn break_count(&self, v: usize) -> u32 {
        let val = self.values[v];
        self.g
            .var_edges(v)
            .iter()
            .filter(|&&e| {
                let e = e as usize;
                val != self.g.edge_negated(e) && self.num_true[self.g.edge_clause(e)] == 1
            })
            .count() as u32
    }

    fn pick_greedy(&self, a: usize, r: &mut rng::Rng) -> usize {
        let clause = self.f.clause(a);
        let mut best = u32::MAX;
        let mut ties = 0u32;
        let mut choice = clause[0].var();
        for l in clause {
            let b = self.break_count(l.var());
            if b < best {
                best = b;
                ties = 1;
                choice = l.var();
            } else if b == best {
                // reservoir sampling over the tied candidates
                ties += 1;
                if r.gen_range(0..ties) == 0 {
                    choice = l.var();
                }
            }
        }
        choice
    }

    pub(crate) fn values(&self) -> &[bool] {
        &self.values
    }
}

/// Runs MaxWalkSat with a prebuilt graph of `f`.
pub fn maxwalksat_with_graph(f: &CnfFormula, g: &FactorGraph, cfg: &WalkSatConfig) -> WalkSatResult {
    maxwalksat_observed(f, g, cfg, |_, _| {})
}

/// As [`maxwalksat_with_graph`], calling `observe(flips, best_unsat)` with
/// the starting count and again each time the overall best improves. With a
/// single restart the best count of a shorter cutoff `c` is the last value
/// observed at `flips <= c`, since the walk is a prefix of the longer one.
pub fn maxwalksat_observed(
    f: &CnfFormula,
    g: &FactorGraph,
    cfg: &WalkSatConfig,
    mut observe: impl FnMut(u64, usize),
) -> WalkSatResult {
    let mut r = rng::rng_from(cfg.seed);
    let n = f.num_vars();
    let mut best: Option<(Vec<bool>, usize)> = None;
    let mut flips_used = 0u64;

    for _ in 0..cfg.restarts.max(1) {
        let init: Vec<bool> = (0..n).map(|_| r.gen::<bool>()).collect();
        let mut state = WalkState::new(f, g, init);
        let mut run_best = state.values().to_vec();
        let mut run_best_unsat = state.unsat_count();
        let mut global = best.as_ref().map_or(usize::MAX, |(_, u)| *u);
        if run_best_unsat < global {
            global = run_best_unsat;
            observe(flips_used, global);
        }
        // flips applied since `run_best` was last synchronized
        let mut trail: Vec<u32> = Vec::new();
        let mut flips = 0u64;
        while state.unsat_count() > 0 && flips < cfg.cutoff {
            let a = state.unsat[r.gen_range(0..state.unsat.len())] as usize;
            let v = if r.gen::<f64>() < cfg.noise {
                let c = f.clause(a);
                c[r.gen_range(0..c.len())].var()
            } else {
                state.pick_greedy(a, &mut r)
            };
            state.flip(v);
            trail.push(v as u32);
            flips += 1;
            if state.unsat_count() < run_best_unsat {
                run_best_unsat = state.unsat_count();
                for v in trail.drain(..) {
                    run_best[v as usize] = !run_best[v as usize];
                }
                if run_best_unsat < global {
                    global = run_best_unsat;
                    observe(flips_used + flips, global);
                }
            }
        }
        flips_used += flips;
        if best.as_ref().is_none_or(|(_, u)| run_best_unsat < *u) {
            best = Some((run_best, run_best_unsat));
        }
        if best.as_ref().is_some_and(|(_, u)| *u == 0) {
            break;
        }
    }

    let (values, best_unsat) = best.expect("at least one restart");
    WalkSatResult {
        best_assignment: Assignment::new(values),
        best_unsat,
        flips_used,
    }
}

/// Random walk from a uniform random assignment: pick a falsified clause
/// uniformly, flip a random variable of it with probability `noise`, else the
/// one breaking the fewest clauses. Keeps the best assignment seen.
pub fn maxwalksat(f: &CnfFormula, cfg: &WalkSatConfig) -> WalkSatResult {
    let g = FactorGraph::new(f);
    maxwalksat_with_graph(f, &g, cfg)
}
