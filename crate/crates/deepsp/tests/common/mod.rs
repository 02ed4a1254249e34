//! Independent reference implementations shared by the integration tests,
//! and the checks comparing the solvers against them. The references
//! themselves never call the code they check.

#![allow(dead_code)]

use deepsp_core::{CnfFormula, MlpModel, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small formula kept as plain `(variable, negated)` pairs.
#[derive(Clone, Debug)]
pub struct MicroGraph {
    pub num_vars: usize,
    pub clauses: Vec<Vec<(usize, bool)>>,
}

impl MicroGraph {
    /// Random formula with at most `max_edges` literal occurrences; clause
    /// lengths 1–3, variables distinct inside a clause.
    pub fn random(rng: &mut ChaCha8Rng, max_edges: usize) -> Self {
        let num_vars = rng.gen_range(1..=6);
        let mut clauses = Vec::new();
        let mut edges = 0;
        loop {
            let len = rng.gen_range(1..=3usize.min(num_vars));
            if edges + len > max_edges {
                break;
            }
            let mut vars: Vec<usize> = Vec::new();
            while vars.len() < len {
                let v = rng.gen_range(0..num_vars);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            clauses.push(vars.into_iter().map(|v| (v, rng.gen_bool(0.5))).collect());
            edges += len;
            if rng.gen_bool(0.25) {
                break;
            }
        }
        if clauses.is_empty() {
            clauses.push(vec![(0, false)]);
        }
        MicroGraph { num_vars, clauses }
    }

    pub fn to_formula(&self) -> CnfFormula {
        let clauses = self.clauses.iter().map(|c| {
            c.iter()
                .map(|&(v, neg)| deepsp_core::Literal::new(v, neg))
                .collect::<Vec<_>>()
        });
        CnfFormula::new(self.num_vars, clauses, None).unwrap()
    }

    /// Flat edge id of literal `p` in clause `a`: clauses laid end to end.
    pub fn edge_id(&self, a: usize, p: usize) -> usize {
        self.clauses[..a].iter().map(|c| c.len()).sum::<usize>() + p
    }

    pub fn num_edges(&self) -> usize {
        self.clauses.iter().map(|c| c.len()).sum()
    }

    /// Survey `eta` of the edge from clause `b` to variable `j`.
    fn survey(&self, eta: &[f64], b: usize, j: usize) -> f64 {
        let p = self.clauses[b].iter().position(|&(v, _)| v == j).unwrap();
        eta[self.edge_id(b, p)]
    }

    /// The SP update for the message from clause `a` to its `p`-th variable,
    /// built from the explicit sets ∂⁺_{ja} (other clauses where `j` has the
    /// same sign as in `a`) and ∂⁻_{ja} (opposite sign). Returns the survey
    /// and whether some normalization vanished (that factor is taken as 1).
    pub fn sp_update(&self, eta: &[f64], a: usize, p: usize) -> (f64, bool) {
        let i = self.clauses[a][p].0;
        let mut out = 1.0;
        let mut contradiction = false;
        for &(j, neg_in_a) in &self.clauses[a] {
            if j == i {
                continue;
            }
            let mut agree = Vec::new();
            let mut disagree = Vec::new();
            for (b, clause) in self.clauses.iter().enumerate() {
                if b == a {
                    continue;
                }
                for &(v, neg) in clause {
                    if v == j {
                        if neg == neg_in_a {
                            agree.push(b);
                        } else {
                            disagree.push(b);
                        }
                    }
                }
            }
            let prod = |set: &[usize]| set.iter().map(|&b| 1.0 - self.survey(eta, b, j)).product::<f64>();
            let p_plus = prod(&agree);
            let p_minus = prod(&disagree);
            let all: Vec<usize> = agree.iter().chain(&disagree).copied().collect();
            let s_minus = (1.0 - p_minus) * p_plus;
            let s_plus = (1.0 - p_plus) * p_minus;
            let s_zero = prod(&all);
            let denom = s_minus + s_plus + s_zero;
            if denom == 0.0 {
                contradiction = true;
            } else {
                out *= s_minus / denom;
            }
        }
        (out, contradiction)
    }
}

/// Surveys in [0, 1] with some exact zeros and ones mixed in.
pub fn random_surveys(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen::<f64>(),
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest number of simultaneously satisfiable clauses, by enumerating all
/// `2^N` assignments (N ≤ 24).
pub fn brute_force_optimum(f: &CnfFormula) -> usize {
    let n = f.num_vars();
    assert!(n <= 24);
    let masks: Vec<(u32, u32)> = f
        .clauses()
        .map(|c| {
            let mut pos = 0u32;
            let mut neg = 0u32;
            for l in c {
                if l.is_negated() {
                    neg |= 1 << l.var();
                } else {
                    pos |= 1 << l.var();
                }
            }
            (pos, neg)
        })
        .collect();
    let mut best = 0;
    for x in 0u32..(1u32 << n) {
        let sat = masks.iter().filter(|&&(p, q)| x & p != 0 || !x & q != 0).count();
        if sat > best {
            best = sat;
            if best == masks.len() {
                break;
            }
        }
    }
    best
}

/// Largest relative deviation between the analytic gradient of the summed
/// loss and central differences with step `h`. Gradients below `floor` in
/// magnitude are compared absolutely against `floor`.
pub fn gradient_check(model: &MlpModel, batch: &[Sample], h: f64, floor: f64) -> f64 {
    let analytic = model.gradient(batch);
    let mut m = model.clone();
    let mut worst = 0.0f64;
    for (k, &g) in analytic.iter().enumerate() {
        let orig = m.params()[k];
        m.params_mut()[k] = orig + h;
        let up = m.loss(batch);
        m.params_mut()[k] = orig - h;
        let down = m.loss(batch);
        m.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        let scale = g.abs().max(numeric.abs()).max(floor);
        worst = worst.max((g - numeric).abs() / scale);
    }
    worst
}

pub fn random_batch(rng: &mut ChaCha8Rng, len: usize) -> Vec<Sample> {
    (0..len)
        .map(|_| Sample {
            x: [
                rng.gen::<f64>(),
                rng.gen::<f64>(),
                rng.gen_range(0..12) as f64,
                rng.gen_range(0..12) as f64,
            ],
            target: rng.gen_bool(0.5),
        })
        .collect()
}

// ---------------------------------------------------------------- checks

use deepsp_core::formula::generate_random_3sat;
use deepsp_core::mlp::DEEPSP_DIMS;
use deepsp_core::pipeline::deepsp_solve;
use deepsp_core::sid::sid_solve;
use deepsp_core::sp::sp_update_edge;
use deepsp_core::{DeepSpConfig, FactorGraph, SidConfig, SidStatus};

#[derive(Debug, Default)]
pub struct SpOracleReport {
    pub graphs: usize,
    pub edges: usize,
    pub max_abs_err: f64,
    pub flag_mismatches: usize,
}

/// Every edge of `graphs` random micro-graphs with at most 12 edges.
pub fn check_sp_update(graphs: usize, seed: u64) -> SpOracleReport {
    let mut r = rng(seed);
    let mut rep = SpOracleReport::default();
    for _ in 0..graphs {
        let mg = MicroGraph::random(&mut r, 12);
        let f = mg.to_formula();
        let g = FactorGraph::new(&f);
        let eta = random_surveys(&mut r, mg.num_edges());
        for (a, c) in mg.clauses.iter().enumerate() {
            for p in 0..c.len() {
                let (want, flag) = mg.sp_update(&eta, a, p);
                let got = sp_update_edge(&g, &eta, mg.edge_id(a, p));
                rep.max_abs_err = rep.max_abs_err.max((got.eta - want).abs());
                rep.flag_mismatches += (got.contradiction != flag) as usize;
                rep.edges += 1;
            }
        }
        rep.graphs += 1;
    }
    rep
}

/// Worst relative gradient error over `models` random networks and batches.
/// The summed loss of a 20-sample batch is ~15, so the difference quotient
/// at h = 1e-5 carries ~1e-9 of rounding noise; gradients smaller than 1e-5
/// are therefore compared against that floor.
pub fn check_gradients(models: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    (0..models)
        .map(|k| {
            let dims: &[usize] = if k % 2 == 0 { &DEEPSP_DIMS } else { &[4, 7, 3, 1] };
            let m = MlpModel::xavier(dims, seed ^ k as u64).unwrap();
            let batch = random_batch(&mut r, 20);
            gradient_check(&m, &batch, 1e-5, 1e-5)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Default)]
pub struct ExhaustiveReport {
    pub formulas: usize,
    pub satisfiable: usize,
    /// Satisfiable formulas where SID returned an assignment.
    pub sid_solved: usize,
    /// ... and that assignment reached the optimum.
    pub sid_optimal: usize,
    pub sid_statuses: Vec<(usize, SidStatus)>,
    /// Formulas where DeepSP claims more satisfied clauses than possible.
    pub deepsp_over_optimum: usize,
}

/// `count` formulas with 10 ≤ N ≤ 20 over a spread of densities.
pub fn check_exhaustive(count: usize, seed: u64) -> ExhaustiveReport {
    let model = MlpModel::xavier(&DEEPSP_DIMS, seed).unwrap();
    let mut rep = ExhaustiveReport::default();
    for k in 0..count {
        let n = 10 + k % 11;
        let alpha = 2.5 + 2.5 * ((k * 7) % 10) as f64 / 10.0;
        let f = generate_random_3sat(n, alpha, seed.wrapping_add(k as u64)).unwrap();
        let opt = brute_force_optimum(&f);
        let m = f.num_clauses();
        rep.formulas += 1;
        if opt == m {
            rep.satisfiable += 1;
            let out = sid_solve(
                &f,
                &SidConfig {
                    seed: k as u64,
                    ..SidConfig::default()
                },
            )
            .unwrap();
            rep.sid_statuses.push((k, out.status));
            if out.status == SidStatus::Solved {
                rep.sid_solved += 1;
            }
            if out.unsat == Some(0) {
                rep.sid_optimal += 1;
            }
        }
        let res = deepsp_solve(
            &f,
            &model,
            &DeepSpConfig {
                seed: k as u64,
                ..DeepSpConfig::default()
            },
        )
        .unwrap();
        if res.satisfied > opt {
            rep.deepsp_over_optimum += 1;
        }
    }
    rep
}

/// DIMACS and model-file round trips on generated data.
pub fn check_round_trips(count: usize, seed: u64) -> Result<(), String> {
    use deepsp::dimacs::{emit_dimacs, parse_dimacs, DimacsOptions};
    use deepsp::model_file::{model_from_str, model_to_string};
    for k in 0..count as u64 {
        let f = generate_random_3sat(50 + k as usize, 4.2, seed + k).unwrap();
        let text = emit_dimacs(&f);
        let back = parse_dimacs(
            &text,
            DimacsOptions {
                strict: true,
                arity: Some(3),
            },
        )
        .map_err(|e| e.to_string())?;
        if back != f || emit_dimacs(&back) != text {
            return Err(format!("DIMACS round trip changed instance {k}"));
        }
        let m = MlpModel::xavier(&DEEPSP_DIMS, seed + k).unwrap();
        let s = model_to_string(&m);
        let m2 = model_from_str(&s).map_err(|e| e.to_string())?;
        let bits = |m: &MlpModel| m.params().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&m2) != bits(&m) || model_to_string(&m2) != s {
            return Err(format!("model round trip changed model {k}"));
        }
    }
    Ok(())
}
