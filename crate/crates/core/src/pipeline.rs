//! DeepSP: one SP run, then every variable is fixed in a single pass from
//! its local features, either by the classifier or, for variables hit by a
//! certain warning, by the majority sign of its occurrences.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::formula::{Assignment, CnfFormula};
use crate::graph::FactorGraph;
use crate::mlp::MlpModel;
use crate::sp::{pi_values, SpParams, SpRunOutcome, SurveyState};

/// `[1 − π⁺, 1 − π⁻, n⁺, n⁻]` for one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector(pub [f64; 4]);

impl FeatureVector {
    pub fn n_plus(&self) -> f64 {
        self.0[2]
    }

    pub fn n_minus(&self) -> f64 {
        self.0[3]
    }
}

/// How occurrence counts are presented to the network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FeatureScaling {
    #[default]
    Raw,
    /// Counts divided by the mean variable degree 3M/N.
    MeanDegree,
}

impl FeatureScaling {
    pub fn apply(self, fv: FeatureVector, mean_degree: f64) -> [f64; 4] {
        match self {
            FeatureScaling::Raw => fv.0,
            FeatureScaling::MeanDegree if mean_degree > 0.0 => {
                [fv.0[0], fv.0[1], fv.0[2] / mean_degree, fv.0[3] / mean_degree]
            }
            FeatureScaling::MeanDegree => fv.0,
        }
    }
}

pub fn mean_degree(g: &FactorGraph) -> f64 {
    if g.num_vars() == 0 {
        0.0
    } else {
        g.num_edges() as f64 / g.num_vars() as f64
    }
}

/// Features of every variable from the current surveys.
pub fn extract_features(g: &FactorGraph, state: &SurveyState) -> Vec<FeatureVector> {
    (0..g.num_vars())
        .map(|i| {
            let (pp, pm) = pi_values(g, state.eta(), i);
            FeatureVector([1.0 - pp, 1.0 - pm, g.n_plus(i) as f64, g.n_minus(i) as f64])
        })
        .collect()
}

/// Variables receiving some survey `η ≥ 1 − tol`, with the value forced by
/// the majority rule: TRUE iff `n⁺ > n⁻`.
pub fn unit_propagation_mask(g: &FactorGraph, state: &SurveyState, eta_one_tol: f64) -> Vec<Option<bool>> {
    let eta = state.eta();
    (0..g.num_vars())
        .map(|i| {
            let warned = g.var_edges(i).iter().any(|&e| eta[e as usize] >= 1.0 - eta_one_tol);
            warned.then(|| g.n_plus(i) > g.n_minus(i))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeepSpConfig {
    pub sp: SpParams,
    pub eta_one_tol: f64,
    pub seed: u64,
    pub scaling: FeatureScaling,
}

impl Default for DeepSpConfig {
    fn default() -> Self {
        DeepSpConfig {
            sp: SpParams::default(),
            eta_one_tol: 1e-9,
            seed: 0,
            scaling: FeatureScaling::Raw,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeepSpResult {
    pub assignment: Assignment,
    pub satisfied: usize,
    pub rho: f64,
    pub one_minus_rho: f64,
    /// Fraction of variables fixed by the majority rule.
    pub omega: f64,
    pub sp_outcome: SpRunOutcome,
}

/// Fixes every variable from a finished SP state. The state is only read.
pub fn assign_from_state(
    g: &FactorGraph,
    state: &SurveyState,
    model: &MlpModel,
    cfg: &DeepSpConfig,
) -> Result<(Assignment, usize)> {
    if model.input_dim() != 4 {
        return Err(Error::ModelInput {
            expected: 4,
            got: model.input_dim(),
        });
    }
    let mask = unit_propagation_mask(g, state, cfg.eta_one_tol);
    let features = extract_features(g, state);
    let md = mean_degree(g);
    let mut forced = 0;
    let values = mask
        .iter()
        .zip(&features)
        .map(|(m, fv)| match m {
            Some(v) => {
                forced += 1;
                *v
            }
            None => model.forward(&cfg.scaling.apply(*fv, md)) >= 0.5,
        })
        .collect();
    Ok((Assignment::new(values), forced))
}

pub fn deepsp_solve(f: &CnfFormula, model: &MlpModel, cfg: &DeepSpConfig) -> Result<DeepSpResult> {
    cfg.sp.validate()?;
    if model.input_dim() != 4 {
        return Err(Error::ModelInput {
            expected: 4,
            got: model.input_dim(),
        });
    }
    let g = FactorGraph::new(f);
    let mut state = SurveyState::random(&g, cfg.sp, cfg.seed);
    let sp_outcome = state.run(&g);
    finish(f, &g, &state, sp_outcome, model, cfg)
}

/// Assignment and metrics for an SP run that has already been performed.
pub fn finish(
    f: &CnfFormula,
    g: &FactorGraph,
    state: &SurveyState,
    sp_outcome: SpRunOutcome,
    model: &MlpModel,
    cfg: &DeepSpConfig,
) -> Result<DeepSpResult> {
    let (assignment, forced) = assign_from_state(g, state, model, cfg)?;
    let eval = f.evaluate(&assignment)?;
    Ok(DeepSpResult {
        assignment,
        satisfied: eval.satisfied,
        rho: eval.rho,
        one_minus_rho: 1.0 - eval.rho,
        omega: forced as f64 / f.num_vars() as f64,
        sp_outcome,
    })
}

/// Fraction of positions where `a` and `b` agree, i.e. one minus the
/// normalized Hamming distance.
pub fn assignment_agreement(a: &Assignment, b: &Assignment) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let same = a.values().iter().zip(b.values()).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Normalized Hamming distance.
pub fn normalized_hamming(a: &Assignment, b: &Assignment) -> Result<f64> {
    assignment_agreement(a, b).map(|ag| 1.0 - ag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::generate_random_3sat;
    use crate::formula::tests::lit;
    use crate::mlp::DEEPSP_DIMS;
    use alloc::vec;

    fn params() -> SpParams {
        SpParams::default()
    }

    #[test]
    fn features_of_simple_graph() {
        // x1 unnegated in one clause with survey 0.6, x2 isolated
        let f = CnfFormula::new(4, [vec![lit(1), lit(3), lit(4)]], Some(3)).unwrap();
        let g = FactorGraph::new(&f);
        let s = SurveyState::from_messages(vec![0.6, 0.0, 0.0], params(), 0);
        let fv = extract_features(&g, &s);
        assert!((fv[0].0[0] - 0.4).abs() < 1e-15);
        assert_eq!(&fv[0].0[1..], &[1.0, 1.0, 0.0]);
        assert_eq!(fv[1].0, [1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn feature_counts_sum_to_edges() {
        let f = generate_random_3sat(1_000, 4.2, 7).unwrap();
        let g = FactorGraph::new(&f);
        let s = SurveyState::random(&g, params(), 1);
        let total: f64 = extract_features(&g, &s).iter().map(|v| v.n_plus() + v.n_minus()).sum();
        assert_eq!(total as usize, 3 * f.num_clauses());
    }

    #[test]
    fn majority_rule() {
        // x1: three unnegated occurrences and one negated, one certain warning
        let f = CnfFormula::new(
            8,
            [
                vec![lit(1), lit(2), lit(3)],
                vec![lit(1), lit(4), lit(5)],
                vec![lit(1), lit(6), lit(7)],
                vec![lit(-1), lit(2), lit(8)],
            ],
            Some(3),
        )
        .unwrap();
        let g = FactorGraph::new(&f);
        let mut eta = vec![0.0; g.num_edges()];
        eta[3] = 1.0;
        let s = SurveyState::from_messages(eta.clone(), params(), 0);
        let mask = unit_propagation_mask(&g, &s, 1e-9);
        assert_eq!(mask[0], Some(true));
        assert_eq!(mask.iter().filter(|m| m.is_some()).count(), 1);

        // n⁺ = n⁻ resolves to FALSE
        let f2 = CnfFormula::new(
            3,
            [vec![lit(1), lit(2), lit(3)], vec![lit(-1), lit(2), lit(-3)]],
            Some(3),
        )
        .unwrap();
        let g2 = FactorGraph::new(&f2);
        let mut eta2 = vec![0.0; 6];
        eta2[0] = 1.0 - 1e-12;
        let s2 = SurveyState::from_messages(eta2, params(), 0);
        assert_eq!(unit_propagation_mask(&g2, &s2, 1e-9)[0], Some(false));

        let none = SurveyState::from_messages(vec![0.5; g.num_edges()], params(), 0);
        assert!(unit_propagation_mask(&g, &none, 1e-9).iter().all(|m| m.is_none()));
    }

    #[test]
    fn zero_model_sets_everything_true() {
        let f = generate_random_3sat(500, 4.2, 2).unwrap();
        let m = MlpModel::zeros(&DEEPSP_DIMS).unwrap();
        let res = deepsp_solve(&f, &m, &DeepSpConfig::default()).unwrap();
        assert_eq!(res.omega, 0.0);
        assert!(res.assignment.values().iter().all(|&v| v));
        assert_eq!(res.one_minus_rho, 1.0 - res.rho);
    }

    #[test]
    fn single_pass_leaves_state_untouched() {
        let f = generate_random_3sat(500, 4.3, 3).unwrap();
        let g = FactorGraph::new(&f);
        let m = MlpModel::xavier(&DEEPSP_DIMS, 1).unwrap();
        let (state, out) = crate::sp::run_sp(&g, params(), 4).unwrap();
        let before = state.clone();
        let cfg = DeepSpConfig::default();
        let res = finish(&f, &g, &state, out, &m, &cfg).unwrap();
        assert_eq!(state, before);
        if res.omega == 0.0 {
            let feats = extract_features(&g, &state);
            for (v, fv) in feats.iter().enumerate() {
                assert_eq!(res.assignment.get(v), m.forward(&fv.0) >= 0.5);
            }
        }
        let direct = deepsp_solve(&f, &m, &DeepSpConfig { seed: 4, ..cfg }).unwrap();
        assert_eq!(direct, res);
    }

    #[test]
    fn rejects_wrong_input_width() {
        let f = generate_random_3sat(50, 4.2, 2).unwrap();
        let m = MlpModel::zeros(&[3, 5, 1]).unwrap();
        assert!(matches!(
            deepsp_solve(&f, &m, &DeepSpConfig::default()),
            Err(Error::ModelInput { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn agreement() {
        let a = Assignment::new(vec![true, false, true, true]);
        let b = Assignment::new(vec![false, true, false, false]);
        assert_eq!(assignment_agreement(&a, &a).unwrap(), 1.0);
        assert_eq!(assignment_agreement(&a, &b).unwrap(), 0.0);
        let c = Assignment::new(vec![true, true, true, false]);
        assert_eq!(assignment_agreement(&a, &c).unwrap(), 0.5);
        assert_eq!(normalized_hamming(&a, &c).unwrap(), 0.5);
        assert!(assignment_agreement(&a, &Assignment::all_false(3)).is_err());
    }
}
