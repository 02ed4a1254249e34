//! Survey-inspired decimation.
//!
//! Each round runs SP on the residual formula, fixes the most biased
//! variables and simplifies. When the surveys collapse to the trivial fixed
//! point the residual formula goes to MaxWalkSat and the two partial
//! assignments are spliced together.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::formula::{Assignment, CnfFormula, Literal};
use crate::graph::FactorGraph;
use crate::rng;
use crate::sp::{compute_marginals, SpParams, SurveyState};
use crate::walksat::{maxwalksat_with_graph, WalkSatConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidConfig {
    pub sp: SpParams,
    /// Fraction of the remaining variables fixed per round.
    pub decimation_fraction: f64,
    /// Every survey below this counts as the trivial fixed point.
    pub trivial_threshold: f64,
    pub walksat: WalkSatConfig,
    pub seed: u64,
}

impl Default for SidConfig {
    fn default() -> Self {
        let sp = SpParams::default();
        SidConfig {
            sp,
            decimation_fraction: 0.005,
            trivial_threshold: sp.epsilon,
            walksat: WalkSatConfig {
                cutoff: 10_000_000,
                ..WalkSatConfig::default()
            },
            seed: 0,
        }
    }
}

impl SidConfig {
    pub fn validate(&self) -> Result<()> {
        self.sp.validate()?;
        if !(self.decimation_fraction > 0.0 && self.decimation_fraction <= 1.0) {
            return Err(Error::InvalidConfig("decimation fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SidStatus {
    Solved,
    ContradictionFailure,
    ConvergenceFailure,
}

impl SidStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SidStatus::Solved => "solved",
            SidStatus::ContradictionFailure => "contradiction",
            SidStatus::ConvergenceFailure => "no-convergence",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SidOutcome {
    pub status: SidStatus,
    pub assignment: Option<Assignment>,
    /// Falsified clauses of the original formula under `assignment`.
    pub unsat: Option<usize>,
    pub fixed_by_decimation: usize,
    pub fixed_by_walksat: usize,
    pub rounds: usize,
    pub total_sweeps: usize,
    /// Surveys of the first SP run, on the undecimated formula.
    pub initial_state: Option<SurveyState>,
}

/// Residual formula after fixing some variables.
#[derive(Clone, Debug)]
pub struct Simplified {
    /// Clauses neither satisfied nor emptied, over the unfixed variables
    /// renumbered densely.
    pub formula: CnfFormula,
    /// `var_map[new] = old`.
    pub var_map: Vec<usize>,
    /// `literal_origin[e]` is the position of residual literal `e` in the
    /// input formula's literal storage.
    pub literal_origin: Vec<usize>,
    /// Clauses whose literals were all falsified.
    pub emptied_clauses: usize,
}

/// Deletes clauses satisfied by `partial`, strips falsified literals and
/// renumbers the unfixed variables.
pub fn simplify(f: &CnfFormula, partial: &[Option<bool>]) -> Result<Simplified> {
    if partial.len() != f.num_vars() {
        return Err(Error::LengthMismatch {
            expected: f.num_vars(),
            got: partial.len(),
        });
    }
    let mut new_index = vec![usize::MAX; f.num_vars()];
    let mut var_map = Vec::new();
    for (v, p) in partial.iter().enumerate() {
        if p.is_none() {
            new_index[v] = var_map.len();
            var_map.push(v);
        }
    }
    let mut literals = Vec::new();
    let mut literal_origin = Vec::new();
    let mut offsets = vec![0];
    let mut emptied = 0;
    for a in 0..f.num_clauses() {
        let range = f.clause_range(a);
        let clause = f.clause(a);
        if clause
            .iter()
            .any(|l| partial[l.var()].is_some_and(|v| l.satisfied_by(v)))
        {
            continue;
        }
        let start = literals.len();
        for (pos, l) in range.zip(clause) {
            if partial[l.var()].is_none() {
                literals.push(Literal::new(new_index[l.var()], l.is_negated()));
                literal_origin.push(pos);
            }
        }
        if literals.len() == start {
            emptied += 1;
        } else {
            offsets.push(literals.len());
        }
    }
    Ok(Simplified {
        formula: CnfFormula::from_parts(var_map.len(), literals, offsets),
        var_map,
        literal_origin,
        emptied_clauses: emptied,
    })
}

pub fn sid_solve(f: &CnfFormula, cfg: &SidConfig) -> Result<SidOutcome> {
    cfg.validate()?;
    let n = f.num_vars();
    let mut fixed: Vec<Option<bool>> = vec![None; n];
    let mut fixed_by_decimation = 0;
    let mut permanent_unsat = 0;
    let mut total_sweeps = 0;
    let mut initial_state = None;

    let mut residual = f.clone();
    // residual variable → original variable
    let mut to_original: Vec<usize> = (0..n).collect();
    let mut eta: Option<Vec<f64>> = None;

    let fail = |status, rounds, total_sweeps, fixed_by_decimation, initial_state| SidOutcome {
        status,
        assignment: None,
        unsat: None,
        fixed_by_decimation,
        fixed_by_walksat: 0,
        rounds,
        total_sweeps,
        initial_state,
    };

    let mut round = 0usize;
    loop {
        let g = FactorGraph::new(&residual);
        let seed = rng::derive(rng::derive(cfg.seed, rng::TAG_SID_ROUND), round as u64);
        let mut state = match eta.take() {
            Some(e) => SurveyState::from_messages(e, cfg.sp, seed),
            None => SurveyState::random(&g, cfg.sp, seed),
        };
        let outcome = state.run(&g);
        total_sweeps += outcome.t_star;
        round += 1;
        if initial_state.is_none() {
            initial_state = Some(state.clone());
        }
        if outcome.contradiction {
            return Ok(fail(
                SidStatus::ContradictionFailure,
                round,
                total_sweeps,
                fixed_by_decimation,
                initial_state,
            ));
        }
        if !outcome.converged {
            return Ok(fail(
                SidStatus::ConvergenceFailure,
                round,
                total_sweeps,
                fixed_by_decimation,
                initial_state,
            ));
        }

        if state.is_trivial(cfg.trivial_threshold) {
            let mut wcfg = cfg.walksat;
            wcfg.seed = rng::derive(cfg.seed, rng::TAG_SID_WALK);
            let walk = maxwalksat_with_graph(&residual, &g, &wcfg);
            let mut values = vec![false; n];
            for (v, x) in fixed.iter().enumerate() {
                if let Some(x) = x {
                    values[v] = *x;
                }
            }
            for (rv, &ov) in to_original.iter().enumerate() {
                values[ov] = walk.best_assignment.get(rv);
            }
            let assignment = Assignment::new(values);
            let unsat = f.unsat_clause_count(&assignment)?;
            debug_assert_eq!(unsat, permanent_unsat + walk.best_unsat);
            return Ok(SidOutcome {
                status: SidStatus::Solved,
                assignment: Some(assignment),
                unsat: Some(unsat),
                fixed_by_decimation,
                fixed_by_walksat: residual.num_vars(),
                rounds: round,
                total_sweeps,
                initial_state,
            });
        }

        let marginals = compute_marginals(&g, &state);
        if marginals.any_contradiction() {
            return Ok(fail(
                SidStatus::ContradictionFailure,
                round,
                total_sweeps,
                fixed_by_decimation,
                initial_state,
            ));
        }
        // isolated variables carry no information; WalkSat sets them
        let mut candidates: Vec<usize> = (0..residual.num_vars()).filter(|&v| g.degree(v) > 0).collect();
        // stable sort: equal biases stay in variable order
        candidates.sort_by(|&x, &y| marginals.vars[y].bias().total_cmp(&marginals.vars[x].bias()));
        let count = libm::ceil(cfg.decimation_fraction * candidates.len() as f64) as usize;
        let mut partial = vec![None; residual.num_vars()];
        for &v in candidates.iter().take(count.max(1)) {
            let m = &marginals.vars[v];
            let value = m.s_plus > m.s_minus;
            partial[v] = Some(value);
            fixed[to_original[v]] = Some(value);
            fixed_by_decimation += 1;
        }

        let simplified = simplify(&residual, &partial)?;
        permanent_unsat += simplified.emptied_clauses;
        let prev_eta = state.eta();
        eta = Some(simplified.literal_origin.iter().map(|&e| prev_eta[e]).collect());
        to_original = simplified.var_map.iter().map(|&v| to_original[v]).collect();
        residual = simplified.formula;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::generate_random_3sat;
    use crate::formula::tests::{lit, nine_var_example};

    #[test]
    fn simplify_example_after_fixing_x1() {
        let f = nine_var_example();
        let mut partial = vec![None; 9];
        partial[0] = Some(true);
        let s = simplify(&f, &partial).unwrap();
        assert_eq!(s.formula.num_clauses(), 3);
        assert_eq!(s.emptied_clauses, 0);
        // (¬x1 ∨ x4 ∨ x5) → (x4 ∨ x5), in the new numbering x4 ↦ 2, x5 ↦ 3
        let c = s.formula.clause(0);
        assert_eq!(c.len(), 2);
        assert_eq!(s.var_map[c[0].var()], 3);
        assert_eq!(s.var_map[c[1].var()], 4);
        assert_eq!(s.var_map.len(), 8);
        assert_eq!(s.literal_origin[0], 4);
    }

    #[test]
    fn simplify_empty_partial_is_identity() {
        let f = nine_var_example();
        let s = simplify(&f, &[None; 9]).unwrap();
        assert_eq!(s.formula, f);
        assert_eq!(s.var_map, (0..9).collect::<Vec<_>>());
        assert_eq!(s.emptied_clauses, 0);
    }

    #[test]
    fn simplify_records_emptied_clause() {
        let f = CnfFormula::new(
            4,
            [vec![lit(1), lit(2), lit(3)], vec![lit(-1), lit(4), lit(2)]],
            Some(3),
        )
        .unwrap();
        let s = simplify(&f, &[Some(false), Some(false), Some(false), None]).unwrap();
        assert_eq!(s.emptied_clauses, 1);
        assert_eq!(s.formula.num_clauses(), 0);
        assert_eq!(s.formula.num_vars(), 1);
    }

    #[test]
    fn low_density_goes_straight_to_walksat() {
        let f = generate_random_3sat(2_000, 3.0, 12).unwrap();
        let out = sid_solve(&f, &SidConfig::default()).unwrap();
        assert_eq!(out.status, SidStatus::Solved);
        assert_eq!(out.rounds, 1);
        assert_eq!(out.fixed_by_decimation, 0);
        assert_eq!(out.fixed_by_walksat, 2_000);
        assert_eq!(out.unsat, Some(0));
    }

    #[test]
    fn decimates_near_threshold() {
        let f = generate_random_3sat(3_000, 4.2, 3).unwrap();
        let cfg = SidConfig {
            decimation_fraction: 0.02,
            seed: 1,
            ..Default::default()
        };
        let out = sid_solve(&f, &cfg).unwrap();
        if out.status == SidStatus::Solved {
            assert!(out.fixed_by_decimation > 0);
            assert_eq!(out.fixed_by_decimation + out.fixed_by_walksat, 3_000);
            let a = out.assignment.as_ref().unwrap();
            assert_eq!(f.unsat_clause_count(a).unwrap(), out.unsat.unwrap());
        }
        assert!(out.initial_state.is_some());
    }

    #[test]
    fn rejects_bad_fraction() {
        let f = nine_var_example();
        let cfg = SidConfig {
            decimation_fraction: 0.0,
            ..Default::default()
        };
        assert!(sid_solve(&f, &cfg).is_err());
    }
}
