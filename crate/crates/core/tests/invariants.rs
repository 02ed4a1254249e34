//! Cross-module invariants on random instances, through the public API.

use deepsp_core::formula::generate_random_3sat;
use deepsp_core::mlp::DEEPSP_DIMS;
use deepsp_core::pipeline::deepsp_solve;
use deepsp_core::sid::sid_solve;
use deepsp_core::sp::compute_marginals;
use deepsp_core::walksat::maxwalksat_observed;
use deepsp_core::{DeepSpConfig, FactorGraph, MlpModel, SidConfig, SidStatus, SpParams, SurveyState, WalkSatConfig};
use proptest::prelude::*;

fn occurrences(f: &deepsp_core::CnfFormula) -> Vec<usize> {
    let mut occ = vec![0; f.num_vars()];
    for c in f.clauses() {
        for l in c {
            occ[l.var()] += 1;
        }
    }
    occ
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leaves_are_silent_after_one_sweep(seed in any::<u64>(), n in 30usize..200) {
        // low density leaves many variables with a single occurrence
        let f = generate_random_3sat(n, 1.5, seed).unwrap();
        let g = FactorGraph::new(&f);
        let occ = occurrences(&f);
        let mut s = SurveyState::random(&g, SpParams::default(), seed);
        s.sweep(&g);
        let mut e = 0;
        for c in f.clauses() {
            for (p, l) in c.iter().enumerate() {
                let others_leaves = c.iter().enumerate().all(|(q, m)| q == p || occ[m.var()] == 1);
                if others_leaves {
                    prop_assert_eq!(s.eta()[e], 0.0, "edge to var {}", l.var());
                }
                e += 1;
            }
        }
    }

    #[test]
    fn marginals_are_normalized(seed in any::<u64>(), alpha in 3.5f64..5.0) {
        let f = generate_random_3sat(300, alpha, seed).unwrap();
        let g = FactorGraph::new(&f);
        let mut s = SurveyState::random(&g, SpParams { t_max: 50, ..SpParams::default() }, seed);
        s.run(&g);
        for m in compute_marginals(&g, &s).vars.iter().filter(|m| !m.contradiction) {
            prop_assert!((m.s_minus + m.s_plus + m.s_zero - 1.0).abs() <= 1e-12);
            prop_assert!(m.s_minus >= 0.0 && m.s_plus >= 0.0 && m.s_zero >= 0.0);
        }
    }

    #[test]
    fn sp_runs_are_reproducible(seed in any::<u64>(), alpha in 3.8f64..4.6) {
        let f = generate_random_3sat(400, alpha, seed).unwrap();
        let g = FactorGraph::new(&f);
        let params = SpParams { t_max: 60, ..SpParams::default() };
        let mut a = SurveyState::random(&g, params, seed);
        let mut b = SurveyState::random(&g, params, seed);
        let (oa, ob) = (a.run(&g), b.run(&g));
        prop_assert_eq!(oa, ob);
        prop_assert!(a.eta().iter().zip(b.eta()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn deepsp_reports_are_consistent(seed in any::<u64>(), alpha in 3.5f64..6.0) {
        let f = generate_random_3sat(300, alpha, seed).unwrap();
        let model = MlpModel::xavier(&DEEPSP_DIMS, seed).unwrap();
        let cfg = DeepSpConfig { seed, ..DeepSpConfig::default() };
        let r = deepsp_solve(&f, &model, &cfg).unwrap();
        let ev = f.evaluate(&r.assignment).unwrap();
        prop_assert_eq!(r.assignment.len(), f.num_vars());
        prop_assert_eq!(r.satisfied, ev.satisfied);
        prop_assert!((r.one_minus_rho - ev.one_minus_rho()).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&r.omega));
        let again = deepsp_solve(&f, &model, &cfg).unwrap();
        prop_assert_eq!(again.assignment, r.assignment);
    }

    #[test]
    fn walksat_best_never_increases(seed in any::<u64>(), alpha in 3.0f64..6.0) {
        let f = generate_random_3sat(200, alpha, seed).unwrap();
        let g = FactorGraph::new(&f);
        let mut trail = Vec::new();
        let cfg = WalkSatConfig { cutoff: 5_000, seed, ..WalkSatConfig::default() };
        let r = maxwalksat_observed(&f, &g, &cfg, |flips, best| trail.push((flips, best)));
        prop_assert!(trail.windows(2).all(|w| w[1].1 < w[0].1 && w[1].0 >= w[0].0));
        prop_assert_eq!(trail.last().unwrap().1, r.best_unsat);
        prop_assert_eq!(f.unsat_clause_count(&r.best_assignment).unwrap(), r.best_unsat);
        prop_assert!(r.flips_used <= cfg.cutoff);
    }
}

#[test]
fn sid_splices_partial_and_residual_assignments() {
    for seed in 0..6 {
        let f = generate_random_3sat(600, 4.0, seed).unwrap();
        let out = sid_solve(
            &f,
            &SidConfig {
                seed,
                decimation_fraction: 0.05,
                ..SidConfig::default()
            },
        )
        .unwrap();
        if out.status == SidStatus::Solved {
            let a = out.assignment.as_ref().unwrap();
            assert_eq!(Some(f.unsat_clause_count(a).unwrap()), out.unsat);
            assert!(out.fixed_by_decimation + out.fixed_by_walksat <= f.num_vars());
        } else {
            assert!(out.assignment.is_none());
        }
    }
}

#[test]
fn generator_draws_distinct_variables() {
    for k in [3, 4, 5] {
        let f = deepsp_core::formula::generate_random_ksat(50, k, 4.0, 7).unwrap();
        assert_eq!(f.num_clauses(), 200);
        for c in f.clauses() {
            let mut vars: Vec<usize> = c.iter().map(|l| l.var()).collect();
            vars.sort_unstable();
            vars.dedup();
            assert_eq!(vars.len(), k);
        }
    }
}
