//! Datasets, training runs and ensemble sweeps.
//!
//! Every instance is identified by `(n, alpha, seed)`: the formula is
//! `generate_random_3sat(n, alpha, seed)` and the SP run uses the same seed,
//! so any row of a report can be replayed on its own.

use std::str::FromStr;

use deepsp_core::formula::generate_random_3sat;
use deepsp_core::mlp::{cross_entropy, train, TrainOutcome};
use deepsp_core::pipeline::{assignment_agreement, extract_features, finish, FeatureScaling};
use deepsp_core::rng::derive;
use deepsp_core::sid::sid_solve;
use deepsp_core::stats::mean_std;
use deepsp_core::{
    Assignment, CnfFormula, DeepSpConfig, FactorGraph, FeatureVector, MlpModel, Sample, SidConfig, SidStatus, SpParams,
    SurveyState, TrainConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("SID failed on {failures} of {attempts} instances at n={n}, alpha={alpha}; giving up")]
    TooManyFailures {
        n: usize,
        alpha: f64,
        attempts: usize,
        failures: usize,
    },
    #[error("invalid settings: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Core(#[from] deepsp_core::Error),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Worker count: `requested` (or the machine's parallelism), capped by the
/// `DEEPSP_THREADS` environment variable when set.
pub fn worker_threads(requested: Option<usize>) -> usize {
    let base = requested
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = std::env::var("DEEPSP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    cap.map_or(base, |c| base.min(c)).max(1)
}

pub fn worker_pool(requested: Option<usize>) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads(requested))
        .build()?)
}

const TAG_TRAIN: u64 = 0x0054_5241_494e;
const TAG_VAL: u64 = 0x0056_414c;
const TAG_SWEEP: u64 = 0x0053_5745_4550;

/// Seed of instance `index` at grid point `(n, alpha)` under `base`.
pub fn instance_seed(base: u64, n: usize, alpha: f64, index: usize) -> u64 {
    derive(derive(derive(base, n as u64), alpha.to_bits()), index as u64)
}

// ---------------------------------------------------------------- datasets

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub n: usize,
    pub alpha_train: f64,
    pub num_train_instances: usize,
    pub alpha_val: f64,
    pub num_val_instances: usize,
    pub sid: SidConfig,
    pub seed: u64,
}

impl DatasetSpec {
    /// 50 training and 10 validation instances at N = 5000.
    pub fn desk() -> Self {
        DatasetSpec {
            n: 5_000,
            alpha_train: 4.2,
            num_train_instances: 50,
            alpha_val: 4.23,
            num_val_instances: 10,
            sid: SidConfig::default(),
            seed: 0,
        }
    }

    /// 400 training and 36 validation instances at N = 10⁴. Long-running.
    pub fn full() -> Self {
        DatasetSpec {
            n: 10_000,
            num_train_instances: 400,
            num_val_instances: 36,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_train_instances == 0 || self.num_val_instances == 0 {
            return Err(HarnessError::InvalidSpec("instance counts must be at least 1".into()));
        }
        if self.n < 3 {
            return Err(HarnessError::InvalidSpec("n must be at least 3".into()));
        }
        self.sid.validate()?;
        Ok(())
    }
}

/// A SID-solved instance with the features of its first SP run.
#[derive(Clone, Debug)]
pub struct LabeledInstance {
    pub seed: u64,
    pub formula: CnfFormula,
    pub solution: Assignment,
    pub features: Vec<FeatureVector>,
}

impl LabeledInstance {
    pub fn mean_degree(&self) -> f64 {
        self.formula.num_literals() as f64 / self.formula.num_vars() as f64
    }

    pub fn samples(&self, scaling: FeatureScaling) -> impl Iterator<Item = Sample> + '_ {
        let md = self.mean_degree();
        self.features.iter().enumerate().map(move |(i, fv)| Sample {
            x: scaling.apply(*fv, md),
            target: self.solution.get(i),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub train: Vec<LabeledInstance>,
    pub val: Vec<LabeledInstance>,
    /// Instances tried and failed, counted up to the last one used.
    pub attempts: usize,
    pub failures: usize,
}

impl Dataset {
    pub fn train_samples(&self, scaling: FeatureScaling) -> Vec<Sample> {
        self.train.iter().flat_map(|inst| inst.samples(scaling)).collect()
    }
}

fn label_instance(n: usize, alpha: f64, seed: u64, sid: &SidConfig) -> Result<Option<LabeledInstance>> {
    let formula = generate_random_3sat(n, alpha, seed)?;
    let out = sid_solve(&formula, &SidConfig { seed, ..*sid })?;
    if out.status != SidStatus::Solved || out.unsat != Some(0) {
        return Ok(None);
    }
    let (Some(solution), Some(state)) = (out.assignment, out.initial_state) else {
        return Ok(None);
    };
    let g = FactorGraph::new(&formula);
    let features = extract_features(&g, &state);
    Ok(Some(LabeledInstance {
        seed,
        formula,
        solution,
        features,
    }))
}

/// Solves `want` instances with SID, replacing failures by fresh ones.
/// Gives up when, after at least max(2·want, 20) attempts, fewer than one
/// in ten succeeded, or after 20·want attempts in any case. Near the
/// threshold (α ≈ 4.23 at N = 5000) a third of the attempts may succeed.
/// Results do not depend on the pool size.
fn solve_ensemble(
    n: usize,
    alpha: f64,
    want: usize,
    base: u64,
    sid: &SidConfig,
    pool: &rayon::ThreadPool,
) -> Result<(Vec<LabeledInstance>, usize, usize)> {
    let min_attempts = (2 * want).max(20);
    let max_attempts = (20 * want).max(min_attempts);
    let mut out = Vec::with_capacity(want);
    let (mut attempts, mut failures) = (0usize, 0usize);
    let mut next = 0usize;
    while out.len() < want {
        let batch = (want - out.len()).max(pool.current_num_threads());
        let seeds: Vec<u64> = (next..next + batch).map(|j| instance_seed(base, n, alpha, j)).collect();
        next += batch;
        let results: Vec<Result<Option<LabeledInstance>>> =
            pool.install(|| seeds.par_iter().map(|&s| label_instance(n, alpha, s, sid)).collect());
        for r in results {
            attempts += 1;
            match r? {
                Some(inst) => out.push(inst),
                None => failures += 1,
            }
            if out.len() == want {
                break;
            }
            let successes = attempts - failures;
            if (attempts >= min_attempts && 10 * successes < attempts) || attempts >= max_attempts {
                return Err(HarnessError::TooManyFailures {
                    n,
                    alpha,
                    attempts,
                    failures,
                });
            }
        }
    }
    Ok((out, attempts, failures))
}

pub fn build_dataset(spec: &DatasetSpec, pool: &rayon::ThreadPool) -> Result<Dataset> {
    spec.validate()?;
    let (train, a1, f1) = solve_ensemble(
        spec.n,
        spec.alpha_train,
        spec.num_train_instances,
        derive(spec.seed, TAG_TRAIN),
        &spec.sid,
        pool,
    )?;
    let (val, a2, f2) = solve_ensemble(
        spec.n,
        spec.alpha_val,
        spec.num_val_instances,
        derive(spec.seed, TAG_VAL),
        &spec.sid,
        pool,
    )?;
    Ok(Dataset {
        train,
        val,
        attempts: a1 + a2,
        failures: f1 + f2,
    })
}

/// Only the validation half of [`build_dataset`].
pub fn solve_validation(spec: &DatasetSpec, pool: &rayon::ThreadPool) -> Result<Vec<LabeledInstance>> {
    spec.validate()?;
    let (val, _, _) = solve_ensemble(
        spec.n,
        spec.alpha_val,
        spec.num_val_instances,
        derive(spec.seed, TAG_VAL),
        &spec.sid,
        pool,
    )?;
    Ok(val)
}

// ---------------------------------------------------------------- accuracy

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    /// Mean fraction of variables set as in the reference solution.
    pub agreement: f64,
    /// Mean normalized Hamming distance, `1 − agreement`.
    pub hamming: f64,
    /// Mean per-variable cross-entropy.
    pub loss: f64,
}

/// Classifier-only accuracy (no unit-propagation override) against the
/// stored solutions, averaged over instances.
pub fn accuracy_eval(model: &MlpModel, val: &[LabeledInstance], scaling: FeatureScaling) -> Result<Accuracy> {
    if val.is_empty() {
        return Err(deepsp_core::Error::EmptyDataset.into());
    }
    let (mut agree, mut loss) = (0.0, 0.0);
    for inst in val {
        let md = inst.mean_degree();
        let mut inst_loss = 0.0;
        let values = inst
            .features
            .iter()
            .enumerate()
            .map(|(i, fv)| {
                let y = model.forward(&scaling.apply(*fv, md));
                inst_loss += cross_entropy(y, inst.solution.get(i));
                y >= 0.5
            })
            .collect();
        agree += assignment_agreement(&inst.solution, &Assignment::new(values))?;
        loss += inst_loss / inst.features.len() as f64;
    }
    let k = val.len() as f64;
    Ok(Accuracy {
        agreement: agree / k,
        hamming: 1.0 - agree / k,
        loss: loss / k,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    /// Validation cross-entropy per variable.
    pub loss: f64,
    pub val_accuracy: f64,
    pub val_hamming: f64,
}

/// Trains on `ds.train`, evaluating on `ds.val` every `eval_every` steps
/// (and at step 0 and the final step).
pub fn train_with_validation(
    ds: &Dataset,
    cfg: &TrainConfig,
    scaling: FeatureScaling,
    eval_every: usize,
) -> Result<(TrainOutcome, Vec<CurvePoint>)> {
    if ds.val.is_empty() {
        return Err(deepsp_core::Error::EmptyDataset.into());
    }
    let every = eval_every.max(1);
    let samples = ds.train_samples(scaling);
    let point = |step: usize, m: &MlpModel| {
        let acc = accuracy_eval(m, &ds.val, scaling).expect("validation set checked non-empty");
        CurvePoint {
            step,
            loss: acc.loss,
            val_accuracy: acc.agreement,
            val_hamming: acc.hamming,
        }
    };
    let mut curve = Vec::new();
    let outcome = train(&samples, cfg, |step, m| {
        if step % every == 0 {
            curve.push(point(step, m));
        }
    })?;
    let last = outcome.losses.len();
    if curve.last().map(|p| p.step) != Some(last) {
        curve.push(point(last, &outcome.model));
    }
    Ok((outcome, curve))
}

// ---------------------------------------------------------------- sweeps

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunFilter {
    ConvergedOnly,
    NonconvergedOnly,
    #[default]
    All,
}

impl RunFilter {
    pub fn as_str(self) -> &'static str {
        match self {
            RunFilter::ConvergedOnly => "converged-only",
            RunFilter::NonconvergedOnly => "nonconverged-only",
            RunFilter::All => "all",
        }
    }

    pub fn keeps(self, r: &RunReport) -> bool {
        match self {
            RunFilter::ConvergedOnly => r.converged,
            RunFilter::NonconvergedOnly => !r.converged,
            RunFilter::All => true,
        }
    }
}

impl FromStr for RunFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "converged-only" | "converged" => Ok(RunFilter::ConvergedOnly),
            "nonconverged-only" | "nonconverged" => Ok(RunFilter::NonconvergedOnly),
            "all" => Ok(RunFilter::All),
            _ => Err(format!("unknown filter `{s}` (converged-only, nonconverged-only, all)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub ns: Vec<usize>,
    /// Ascending.
    pub alphas: Vec<f64>,
    pub instances: usize,
    pub sp: SpParams,
    pub filter: RunFilter,
    pub seed: u64,
    /// Settings of the assignment step when a model is supplied; its `sp`
    /// and `seed` fields are ignored.
    pub deepsp: DeepSpConfig,
}

impl SweepSpec {
    /// N = 10⁴, 50 instances per point around the convergence transition.
    pub fn desk() -> Self {
        SweepSpec {
            ns: vec![10_000],
            alphas: vec![4.0, 4.1, 4.2, 4.25, 4.3, 4.35, 4.4, 4.5, 4.6],
            instances: 50,
            sp: SpParams::default(),
            filter: RunFilter::All,
            seed: 0,
            deepsp: DeepSpConfig::default(),
        }
    }

    /// 10³ instances per point on a 0.02 grid over [3.90, 4.62]. Long-running.
    pub fn full() -> Self {
        let alphas = (0..=36).map(|k| ((390 + 2 * k) as f64) / 100.0).collect();
        SweepSpec {
            alphas,
            instances: 1_000,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.alphas.is_empty() {
            return Err(HarnessError::InvalidSpec("empty grid".into()));
        }
        if self.instances == 0 {
            return Err(HarnessError::InvalidSpec(
                "instances per point must be at least 1".into(),
            ));
        }
        if self
            .alphas
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(core::cmp::Ordering::Less))
        {
            return Err(HarnessError::InvalidSpec(
                "alpha grid must be strictly ascending".into(),
            ));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(HarnessError::InvalidSpec("alpha values must be positive".into()));
        }
        self.sp.validate()?;
        Ok(())
    }
}

/// Per-instance record. DeepSP columns are empty when no model was used,
/// `agreement` when no reference solution exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: usize,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub converged: bool,
    pub t_star: usize,
    pub frac_unconverged_messages: f64,
    pub instance_eps: f64,
    pub contradiction: bool,
    pub one_minus_rho: Option<f64>,
    pub omega: Option<f64>,
    pub agreement: Option<f64>,
}

/// SP (and DeepSP when `model` is given) on one instance.
pub fn run_instance(
    instance: usize,
    n: usize,
    alpha: f64,
    seed: u64,
    sp: SpParams,
    model: Option<&MlpModel>,
    dcfg: &DeepSpConfig,
) -> Result<RunReport> {
    let f = generate_random_3sat(n, alpha, seed)?;
    let g = FactorGraph::new(&f);
    let mut state = SurveyState::random(&g, sp, seed);
    let out = state.run(&g);
    let mut report = RunReport {
        instance,
        n,
        alpha,
        seed,
        converged: out.converged,
        t_star: out.t_star,
        frac_unconverged_messages: out.frac_unconverged_messages,
        instance_eps: out.instance_eps,
        contradiction: out.contradiction,
        one_minus_rho: None,
        omega: None,
        agreement: None,
    };
    if let Some(m) = model {
        let cfg = DeepSpConfig { sp, seed, ..*dcfg };
        let res = finish(&f, &g, &state, out, m, &cfg)?;
        report.one_minus_rho = Some(res.one_minus_rho);
        report.omega = Some(res.omega);
    }
    Ok(report)
}

/// Aggregates of one grid point over the runs kept by the filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub n: usize,
    pub alpha: f64,
    pub filter: RunFilter,
    pub runs: usize,
    pub kept: usize,
    /// Fraction of all runs that did not converge.
    pub nu: f64,
    pub t_star_ratio_mean: Option<f64>,
    pub t_star_ratio_std: Option<f64>,
    pub frac_unconverged_mean: Option<f64>,
    pub frac_unconverged_std: Option<f64>,
    pub eps_mean: Option<f64>,
    pub eps_std: Option<f64>,
    pub one_minus_rho_mean: Option<f64>,
    pub one_minus_rho_std: Option<f64>,
    pub omega_mean: Option<f64>,
    pub omega_std: Option<f64>,
}

/// Groups `runs` by `(n, alpha)` in order of first appearance. Standard
/// deviations are sample deviations.
pub fn aggregate(runs: &[RunReport], filter: RunFilter, t_max: usize) -> Vec<PointSummary> {
    let mut keys: Vec<(usize, u64)> = Vec::new();
    for r in runs {
        let k = (r.n, r.alpha.to_bits());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(n, abits)| {
            let group: Vec<&RunReport> = runs.iter().filter(|r| r.n == n && r.alpha.to_bits() == abits).collect();
            let kept: Vec<&RunReport> = group.iter().copied().filter(|r| filter.keeps(r)).collect();
            let stat = |f: &dyn Fn(&RunReport) -> Option<f64>| {
                let xs: Vec<f64> = kept.iter().filter_map(|r| f(r)).collect();
                mean_std(&xs).unzip()
            };
            let (t_m, t_s) = stat(&|r| Some(r.t_star as f64 / t_max as f64));
            let (u_m, u_s) = stat(&|r| Some(r.frac_unconverged_messages));
            // ⟨ε⟩ only over instances where it is non-trivial
            let (e_m, e_s) = stat(&|r| (r.instance_eps > 0.0).then_some(r.instance_eps));
            let (q_m, q_s) = stat(&|r| r.one_minus_rho);
            let (w_m, w_s) = stat(&|r| r.omega);
            PointSummary {
                n,
                alpha: f64::from_bits(abits),
                filter,
                runs: group.len(),
                kept: kept.len(),
                nu: group.iter().filter(|r| !r.converged).count() as f64 / group.len() as f64,
                t_star_ratio_mean: t_m,
                t_star_ratio_std: t_s,
                frac_unconverged_mean: u_m,
                frac_unconverged_std: u_s,
                eps_mean: e_m,
                eps_std: e_s,
                one_minus_rho_mean: q_m,
                one_minus_rho_std: q_s,
                omega_mean: w_m,
                omega_std: w_s,
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub runs: Vec<RunReport>,
    pub points: Vec<PointSummary>,
}

pub fn sweep(spec: &SweepSpec, model: Option<&MlpModel>, pool: &rayon::ThreadPool) -> Result<SweepOutput> {
    spec.validate()?;
    let base = derive(spec.seed, TAG_SWEEP);
    let jobs: Vec<(usize, usize, f64)> = spec
        .ns
        .iter()
        .flat_map(|&n| {
            spec.alphas
                .iter()
                .flat_map(move |&a| (0..spec.instances).map(move |i| (i, n, a)))
        })
        .collect();
    let runs = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, n, a)| run_instance(i, n, a, instance_seed(base, n, a, i), spec.sp, model, &spec.deepsp))
            .collect::<Result<Vec<_>>>()
    })?;
    let points = aggregate(&runs, spec.filter, spec.sp.t_max);
    Ok(SweepOutput { runs, points })
}
