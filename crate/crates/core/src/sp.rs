//! Survey Propagation.
//!
//! A survey `η[e]` lives on every edge `e = (a → i)` and is the probability
//! that clause `a` warns variable `i`. One sweep updates every survey once,
//! asynchronously, visiting clauses in a fresh seeded permutation. All the
//! edges of a clause are refreshed together: the cavity quantities of a
//! clause's variables exclude that clause's own surveys, so this is the same
//! as updating those edges one after another.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::FactorGraph;
use crate::prefetch;
use crate::rng;

/// Iteration cap and convergence tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpParams {
    pub t_max: usize,
    pub epsilon: f64,
}

impl Default for SpParams {
    fn default() -> Self {
        SpParams {
            t_max: 1024,
            epsilon: 1e-2,
        }
    }
}

impl SpParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::InvalidConfig("t_max must be at least 1"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("epsilon must be positive"));
        }
        Ok(())
    }
}

/// All surveys of one run plus iteration bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct SurveyState {
    eta: Vec<f64>,
    eta_prev: Vec<f64>,
    t: usize,
    params: SpParams,
    seed: u64,
}

/// New value of one survey.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeUpdate {
    pub eta: f64,
    /// Some `s⁻ + s⁺ + s⁰` vanished; that factor was taken as 1.
    pub contradiction: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepStats {
    pub max_delta: f64,
    /// Edges whose survey moved by at least ε in this sweep.
    pub unconverged_edges: usize,
    pub contradiction: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepTrace {
    pub sweep: usize,
    pub max_delta: f64,
    pub frac_unconverged: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpRunOutcome {
    pub converged: bool,
    /// Sweeps performed: `t*` on convergence, otherwise `t_max`.
    pub t_star: usize,
    pub frac_unconverged_messages: f64,
    /// Mean final residual over the surveys that did not converge.
    pub instance_eps: f64,
    /// The last sweep hit a vanishing normalization.
    pub contradiction: bool,
}

impl SurveyState {
    /// Surveys drawn i.i.d. uniform on [0, 1).
    pub fn random(g: &FactorGraph, params: SpParams, seed: u64) -> Self {
        let mut r = rng::rng_for(seed, rng::TAG_SP_INIT);
        let eta: Vec<f64> = (0..g.num_edges()).map(|_| r.gen::<f64>()).collect();
        Self::from_messages(eta, params, seed)
    }

    /// Starts from given surveys, e.g. carried over from a previous run.
    pub fn from_messages(eta: Vec<f64>, params: SpParams, seed: u64) -> Self {
        assert!(eta.iter().all(|&x| (0.0..=1.0).contains(&x)));
        SurveyState {
            eta_prev: eta.clone(),
            eta,
            t: 0,
            params,
            seed,
        }
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Surveys before the last sweep.
    pub fn eta_prev(&self) -> &[f64] {
        &self.eta_prev
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn params(&self) -> SpParams {
        self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// |η_t − η_{t−1}| per edge for the last sweep.
    pub fn deltas(&self) -> impl Iterator<Item = f64> + '_ {
        self.eta.iter().zip(&self.eta_prev).map(|(a, b)| (a - b).abs())
    }

    /// Per-edge convergence flags for the last sweep.
    pub fn converged_flags(&self) -> Vec<bool> {
        let eps = self.params.epsilon;
        self.deltas().map(|d| d < eps).collect()
    }

    /// Computes the new survey for edge `e` from the current state without
    /// writing it.
    pub fn update_edge(&self, g: &FactorGraph, e: usize) -> EdgeUpdate {
        sp_update_edge(g, &self.eta, e)
    }

    /// One asynchronous sweep over every edge.
    pub fn sweep(&mut self, g: &FactorGraph) -> SweepStats {
        debug_assert_eq!(self.eta.len(), g.num_edges());
        let mut order: Vec<u32> = (0..g.num_clauses() as u32).collect();
        order.shuffle(&mut rng::rng_for(
            rng::derive(self.seed, rng::TAG_SP_SWEEP),
            self.t as u64,
        ));
        let mut cache = ProductCache::build(g, &self.eta);
        // Every edge is rewritten exactly once per sweep, so the snapshot
        // equals each edge's value just before its update.
        self.eta_prev.copy_from_slice(&self.eta);

        let eps = self.params.epsilon;
        let mut max_delta = 0.0f64;
        let mut unconverged = 0usize;
        let mut contradiction = false;
        let mut ratios = [0.0f64; 8];
        let mut ratio_buf = Vec::new();
        for (i, &a) in order.iter().enumerate() {
            // The visiting order is known, so the scattered reads of clauses
            // a few steps ahead are started early: first the clause's edge
            // range, then its surveys and literals, then its variables.
            if let Some(&b) = order.get(i + 3 * PREFETCH_AHEAD) {
                g.prefetch_clause(b as usize);
            }
            if let Some(&b) = order.get(i + 2 * PREFETCH_AHEAD) {
                let start = g.clause_edges(b as usize).start;
                g.prefetch_edge(start);
                if let Some(x) = self.eta.get(start) {
                    prefetch::hint(x);
                }
            }
            if let Some(&b) = order.get(i + PREFETCH_AHEAD) {
                for e in g.clause_edges(b as usize) {
                    cache.prefetch(g, e);
                }
            }
            let edges = g.clause_edges(a as usize);
            let k = edges.len();
            let ratios: &mut [f64] = if k <= ratios.len() {
                &mut ratios[..k]
            } else {
                ratio_buf.resize(k, 0.0);
                &mut ratio_buf[..]
            };
            for (slot, e) in ratios.iter_mut().zip(edges.clone()) {
                match cache.cavity_ratio(g, &self.eta, e) {
                    Some(r) => *slot = r,
                    None => {
                        *slot = 1.0;
                        contradiction = true;
                    }
                }
            }
            for (p, e) in edges.enumerate() {
                let mut new = 1.0;
                for (q, r) in ratios.iter().enumerate() {
                    if q != p {
                        new *= r;
                    }
                }
                debug_assert!((0.0..=1.0).contains(&new), "survey {new} out of range");
                let old = self.eta[e];
                cache.replace(g, e, old, new);
                self.eta[e] = new;
                let d = (new - old).abs();
                if d >= eps {
                    unconverged += 1;
                }
                if d > max_delta {
                    max_delta = d;
                }
            }
        }
        self.t += 1;
        SweepStats {
            max_delta,
            unconverged_edges: unconverged,
            contradiction,
        }
    }

    /// Sweeps until the largest change drops below ε or `t_max` sweeps have
    /// been done in total.
    pub fn run(&mut self, g: &FactorGraph) -> SpRunOutcome {
        self.run_traced(g, |_| {})
    }

    pub fn run_traced(&mut self, g: &FactorGraph, mut trace: impl FnMut(SweepTrace)) -> SpRunOutcome {
        let edges = g.num_edges().max(1) as f64;
        let mut converged = false;
        let mut contradiction = false;
        while self.t < self.params.t_max {
            let stats = self.sweep(g);
            contradiction = stats.contradiction;
            trace(SweepTrace {
                sweep: self.t,
                max_delta: stats.max_delta,
                frac_unconverged: stats.unconverged_edges as f64 / edges,
            });
            if stats.max_delta < self.params.epsilon {
                converged = true;
                break;
            }
        }
        self.outcome(converged, contradiction)
    }

    fn outcome(&self, converged: bool, contradiction: bool) -> SpRunOutcome {
        let eps = self.params.epsilon;
        let edges = self.eta.len();
        let unconverged = self.deltas().filter(|&d| d >= eps).count();
        SpRunOutcome {
            converged,
            t_star: self.t,
            frac_unconverged_messages: if edges == 0 {
                0.0
            } else {
                unconverged as f64 / edges as f64
            },
            instance_eps: instance_epsilon(self, eps),
            contradiction,
        }
    }

    /// Whether every survey is below `threshold` (the trivial fixed point).
    pub fn is_trivial(&self, threshold: f64) -> bool {
        self.eta.iter().all(|&x| x < threshold)
    }
}

/// Random initialization followed by [`SurveyState::run`].
pub fn run_sp(g: &FactorGraph, params: SpParams, seed: u64) -> Result<(SurveyState, SpRunOutcome)> {
    params.validate()?;
    let mut state = SurveyState::random(g, params, seed);
    let outcome = state.run(g);
    Ok((state, outcome))
}

/// `s⁻ / (s⁻ + s⁺ + s⁰)` for the variable on edge `e`, relative to the
/// clause of `e`. `None` when the normalization vanishes.
#[inline]
fn cavity_ratio(g: &FactorGraph, eta: &[f64], e: usize) -> Option<f64> {
    let j = g.edge_var(e);
    // "same" clauses are satisfied when j satisfies this clause, the "other"
    // ones are violated by that choice.
    let (same, other) = if g.edge_negated(e) {
        (g.negative_edges(j), g.positive_edges(j))
    } else {
        (g.positive_edges(j), g.negative_edges(j))
    };
    let mut p_same = 1.0;
    for &b in same {
        if b as usize != e {
            p_same *= 1.0 - eta[b as usize];
        }
    }
    let mut p_other = 1.0;
    for &b in other {
        p_other *= 1.0 - eta[b as usize];
    }
    normalized_ratio(p_same, p_other)
}

/// Below this a cached product is recomputed directly instead of divided.
const TINY_PRODUCT: f64 = 1e-250;

/// How many clauses ahead of the sweep the prefetch stages run.
const PREFETCH_AHEAD: usize = 8;

/// Per-variable products of `1 − η` over each sign class, rebuilt at the
/// start of every sweep and kept current by dividing out the old factor and
/// multiplying in the new one. Exact zeros (η = 1) are counted instead of
/// multiplied so they can be removed again.
struct ProductCache {
    // one record per variable keeps a lookup to a single cache line
    vars: Vec<VarProducts>,
}

#[derive(Clone, Copy)]
struct VarProducts {
    // [unnegated, negated]
    prod: [f64; 2],
    zeros: [u32; 2],
}

impl ProductCache {
    fn build(g: &FactorGraph, eta: &[f64]) -> Self {
        let mut vars = alloc::vec![
            VarProducts {
                prod: [1.0; 2],
                zeros: [0; 2],
            };
            g.num_vars()
        ];
        // edge order: sequential reads of `eta`, and per variable and sign
        // the same multiplication order as walking its occurrence list
        for (e, &x) in eta.iter().enumerate() {
            if e + 2 * PREFETCH_AHEAD < eta.len() {
                prefetch::hint(&vars[g.edge_var(e + 2 * PREFETCH_AHEAD)]);
            }
            let v = &mut vars[g.edge_var(e)];
            let side = g.edge_negated(e) as usize;
            let f = 1.0 - x;
            if f == 0.0 {
                v.zeros[side] += 1;
            } else {
                v.prod[side] *= f;
            }
        }
        ProductCache { vars }
    }

    #[inline]
    fn prefetch(&self, g: &FactorGraph, e: usize) {
        prefetch::hint(&self.vars[g.edge_var(e)]);
    }

    #[inline]
    fn replace(&mut self, g: &FactorGraph, e: usize, old: f64, new: f64) {
        let v = &mut self.vars[g.edge_var(e)];
        let side = g.edge_negated(e) as usize;
        let (fo, fn_) = (1.0 - old, 1.0 - new);
        if fo == 0.0 {
            v.zeros[side] -= 1;
        } else {
            v.prod[side] /= fo;
        }
        if fn_ == 0.0 {
            v.zeros[side] += 1;
        } else {
            v.prod[side] *= fn_;
        }
    }

    #[inline]
    fn cavity_ratio(&self, g: &FactorGraph, eta: &[f64], e: usize) -> Option<f64> {
        let v = &self.vars[g.edge_var(e)];
        let same = g.edge_negated(e) as usize;
        let other = 1 - same;
        let [ps, po] = [v.prod[same], v.prod[other]];
        if ps < TINY_PRODUCT || po < TINY_PRODUCT {
            return cavity_ratio(g, eta, e);
        }
        let f = 1.0 - eta[e];
        let zs = v.zeros[same];
        let p_same = if f == 0.0 {
            if zs == 1 {
                ps
            } else {
                0.0
            }
        } else if zs > 0 {
            0.0
        } else {
            // division can leave the product an ulp above 1
            (ps / f).min(1.0)
        };
        let p_other = if v.zeros[other] > 0 { 0.0 } else { po.min(1.0) };
        normalized_ratio(p_same, p_other)
    }
}

#[inline]
fn normalized_ratio(p_same: f64, p_other: f64) -> Option<f64> {
    let s_minus = (1.0 - p_other) * p_same;
    let s_plus = (1.0 - p_same) * p_other;
    let s_zero = p_same * p_other;
    let denom = s_minus + s_plus + s_zero;
    if denom == 0.0 {
        None
    } else {
        Some(s_minus / denom)
    }
}

/// New survey for edge `e = (a → i)` given the surveys `eta`.
pub fn sp_update_edge(g: &FactorGraph, eta: &[f64], e: usize) -> EdgeUpdate {
    let a = g.edge_clause(e);
    let mut out = 1.0;
    let mut contradiction = false;
    for other in g.clause_edges(a) {
        if other == e {
            continue;
        }
        match cavity_ratio(g, eta, other) {
            Some(r) => out *= r,
            None => contradiction = true,
        }
    }
    EdgeUpdate {
        eta: out,
        contradiction,
    }
}

/// Mean of the final residuals `|η_t − η_{t−1}|` over edges whose residual
/// is at least `epsilon`; zero when every survey converged.
pub fn instance_epsilon(state: &SurveyState, epsilon: f64) -> f64 {
    let (sum, count) = state
        .deltas()
        .filter(|&d| d >= epsilon)
        .fold((0.0, 0usize), |(s, c), d| (s + d, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// SP marginals of one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarMarginal {
    pub pi_plus: f64,
    pub pi_minus: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    pub s_zero: f64,
    /// π⁺ = π⁻ = 1; the S values are then the sentinel (½, ½, 0).
    pub contradiction: bool,
}

impl VarMarginal {
    pub fn from_pi(pi_plus: f64, pi_minus: f64) -> Self {
        let denom = 1.0 - pi_plus * pi_minus;
        if denom <= 0.0 {
            return VarMarginal {
                pi_plus,
                pi_minus,
                s_minus: 0.5,
                s_plus: 0.5,
                s_zero: 0.0,
                contradiction: true,
            };
        }
        let s_minus = pi_minus * (1.0 - pi_plus) / denom;
        let s_plus = pi_plus * (1.0 - pi_minus) / denom;
        VarMarginal {
            pi_plus,
            pi_minus,
            s_minus,
            s_plus,
            s_zero: 1.0 - s_minus - s_plus,
            contradiction: false,
        }
    }

    /// Decimation priority `1 − min(S⁻, S⁺)`.
    pub fn bias(&self) -> f64 {
        1.0 - self.s_minus.min(self.s_plus)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpMarginals {
    pub vars: Vec<VarMarginal>,
}

impl SpMarginals {
    pub fn any_contradiction(&self) -> bool {
        self.vars.iter().any(|v| v.contradiction)
    }
}

/// `π±ᵢ = 1 − Π_{b∈∂ᵢ±} (1 − η_{b→i})`.
pub fn pi_values(g: &FactorGraph, eta: &[f64], i: usize) -> (f64, f64) {
    let prod = |edges: &[u32]| edges.iter().fold(1.0, |p, &b| p * (1.0 - eta[b as usize]));
    (1.0 - prod(g.positive_edges(i)), 1.0 - prod(g.negative_edges(i)))
}

pub fn compute_marginals(g: &FactorGraph, state: &SurveyState) -> SpMarginals {
    let vars = (0..g.num_vars())
        .map(|i| {
            let (p, m) = pi_values(g, state.eta(), i);
            VarMarginal::from_pi(p, m)
        })
        .collect();
    SpMarginals { vars }
}
