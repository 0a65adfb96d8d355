//! Preference training: best-vs-others loss, curriculum over problem sizes, expert tuning.

mod loss;
mod trainer;

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use loss::{cpo_best_vs_others_loss, dpo_pair_loss, ref_logweight, softplus, CpoLoss, NllVariant, PreferenceBatch};
pub use trainer::{StepRecord, Trainer, TrainerState, METRICS_HEADER};

use crate::autodiff::Tape;
use crate::circuit::{expectation_with_table, run_circuit, sample_shots, Circuit};
use crate::embed::embed;
use crate::error::{GqcoError, Result};
use crate::generator::{select_best, CircuitGenerator};
use crate::ising::{energy_table, ground_truth_from_table, is_correct_against, random_problem, IsingProblem};
use crate::model::{ExpertInit, GqcoModel, ModelConfig, SamplingConfig};
use crate::optim::{Adam, AdamConfig};
use crate::scalar::Real;
use crate::seed::{derive_seed, streams};

/// Everything that defines a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub beta: f64,
    /// Circuits sampled per step for each size; larger sizes fall back to the largest listed size below.
    pub samples_per_n: BTreeMap<usize, usize>,
    pub adam: AdamConfig,
    pub eval_frequency: u64,
    pub accuracy_threshold: f64,
    pub t_train: f64,
    pub t_eval: f64,
    pub nll_variant: NllVariant,
    pub seed: u64,
    pub eval_problems: usize,
    pub eval_samples: usize,
    pub max_steps: u64,
    /// Curriculum stops once the accuracy gate passes at this size.
    pub final_n: usize,
    /// Rank circuits by shot estimates instead of exact expectations.
    pub ranking_shots: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::desk(),
            beta: 0.1,
            samples_per_n: [(3, 128), (4, 128), (5, 64), (6, 48)].into_iter().collect(),
            adam: AdamConfig::default(),
            eval_frequency: 500,
            accuracy_threshold: 0.9,
            t_train: 1.0,
            t_eval: 2.0,
            nll_variant: NllVariant::LogProb,
            seed: 0,
            eval_problems: 200,
            eval_samples: 100,
            max_steps: 50_000,
            final_n: 6,
            ranking_shots: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.beta > 0.0) {
            return Err(GqcoError::config("beta must be positive"));
        }
        if self.samples_per_n.is_empty() || self.samples_per_n.values().any(|&m| m < 2) {
            return Err(GqcoError::config("every samples_per_n entry must be at least 2"));
        }
        if !(self.accuracy_threshold > 0.0 && self.accuracy_threshold <= 1.0) {
            return Err(GqcoError::config("accuracy_threshold must lie in (0, 1]"));
        }
        if !(self.t_train > 0.0 && self.t_eval > 0.0) {
            return Err(GqcoError::config("temperatures must be positive"));
        }
        if self.eval_frequency == 0 || self.eval_problems == 0 || self.eval_samples == 0 {
            return Err(GqcoError::config("evaluation frequency and sizes must be positive"));
        }
        if !(3..=self.model.max_qubits).contains(&self.final_n) {
            return Err(GqcoError::config(format!("final_n must lie in 3..={}", self.model.max_qubits)));
        }
        if self.ranking_shots == Some(0) {
            return Err(GqcoError::config("ranking_shots must be positive"));
        }
        Ok(())
    }

    pub fn samples_for(&self, n: usize) -> Result<usize> {
        self.samples_per_n
            .range(..=n)
            .next_back()
            .map(|(_, &m)| m)
            .ok_or_else(|| GqcoError::config(format!("no sample count configured for n={n}")))
    }
}

/// Probability of drawing each size when the curriculum has reached `n_max`.
pub fn size_distribution(n_max: usize) -> Result<BTreeMap<usize, f64>> {
    if n_max < 3 {
        return Err(GqcoError::domain(format!("n_max must be at least 3, got {n_max}")));
    }
    if n_max == 3 {
        return Ok([(3, 1.0)].into_iter().collect());
    }
    let low = 0.5 / (n_max - 3) as f64;
    Ok((3..=n_max).map(|n| (n, if n == n_max { 0.5 } else { low })).collect())
}

/// Draws a size from a distribution by inverse CDF over ascending sizes.
pub fn sample_size<R: Rng + ?Sized>(dist: &BTreeMap<usize, f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (&n, &p) in dist {
        acc += p;
        if u < acc {
            return n;
        }
    }
    *dist.keys().next_back().expect("non-empty distribution")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    BaseTraining,
    ExpertTuning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub n_max: usize,
    /// `(step, accuracy)` history per evaluated size.
    pub history: BTreeMap<usize, Vec<(u64, f64)>>,
    pub phase: Phase,
}

impl Default for CurriculumState {
    fn default() -> Self {
        Self { n_max: 3, history: BTreeMap::new(), phase: Phase::BaseTraining }
    }
}

/// Records `accuracy` at `n_max`; on a strict pass moves to `n_max + 1` and registers its expert.
pub fn curriculum_advance<T: Real>(
    state: &CurriculumState,
    step: u64,
    accuracy: f64,
    threshold: f64,
    model: &mut GqcoModel<T>,
) -> Result<CurriculumState> {
    let mut next = state.clone();
    next.history.entry(state.n_max).or_default().push((step, accuracy));
    if accuracy > threshold {
        next.n_max += 1;
        if model.select_expert(next.n_max).is_err() {
            model.add_expert(next.n_max, ExpertInit::CopyNearest)?;
        }
    }
    Ok(next)
}

/// Fraction of fixed random problems whose best-of-`num_samples` circuit yields a ground state.
///
/// Problem `k` is drawn from a seed fixed by `(seed, k)`, so repeated calls score the same set.
pub fn evaluate_accuracy<T: Real, G: CircuitGenerator<T> + ?Sized>(
    generator: &G,
    n: usize,
    num_problems: usize,
    num_samples: usize,
    temperature: f64,
    seed: u64,
) -> Result<f64> {
    if num_problems == 0 {
        return Err(GqcoError::domain("need at least one evaluation problem"));
    }
    let hits: Vec<bool> = (0..num_problems as u64)
        .into_par_iter()
        .map(|k| {
            let p = random_problem::<T>(n, derive_seed(seed, streams::EVAL_PROBLEM, k))?;
            let table = energy_table(&p)?;
            let truth = ground_truth_from_table(n, &table);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, streams::EVAL_SAMPLING, k));
            let sel = select_best(generator, &p, &table, num_samples, temperature, &mut rng)?;
            is_correct_against(&p, &truth, &sel.answer)
        })
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / num_problems as f64)
}

/// What a step trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    /// All parameters; size drawn from the curriculum distribution.
    Base { n_max: usize },
    /// Only the expert for this size is updated.
    ExpertTune { n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub n: usize,
    pub loss: f64,
    pub best_expectation: f64,
    pub mean_expectation: f64,
    /// Best expectation minus the exact optimum (sizes up to 6).
    pub optimality_gap: Option<f64>,
    pub best_log_prob: f64,
}

/// Scores `circuits` against the current parameters, applies one optimiser step on the
/// best-vs-others loss and returns the batch with its pre-update loss.
///
/// With `only_expert = Some(n)` gradients outside that expert are dropped.
pub fn preference_update<T: Real>(
    model: &mut GqcoModel<T>,
    opt: &mut Adam<T>,
    cfg: &TrainConfig,
    problem: &IsingProblem<T>,
    circuits: Vec<Circuit>,
    expectations: Vec<f64>,
    only_expert: Option<usize>,
) -> Result<(PreferenceBatch<T>, CpoLoss)> {
    let n = problem.n();
    let sampling = SamplingConfig::with_temperature(cfg.t_train);
    let graph = embed(problem, model.config().max_qubits);
    let (batch, loss, mut grads) = {
        let mut tape = Tape::new(model.params());
        let memory = model.encode_on_tape(&mut tape, &graph)?;
        let seqs: Vec<Vec<usize>> = circuits.iter().map(|c| c.tokens.clone()).collect();
        let lp = model.sequence_log_probs_on_tape(&mut tape, memory, n, &seqs, &sampling)?;
        let log_probs: Vec<f64> = tape.value(lp).iter().map(|v| v.as_f64()).collect();
        let batch = PreferenceBatch::new(problem.clone(), circuits, expectations, log_probs)?;
        let loss = cpo_best_vs_others_loss(&batch, cfg.beta, cfg.nll_variant)?;
        let weights = Array2::from_shape_fn((batch.len(), 1), |(k, _)| T::lit(loss.d_log_probs[k]));
        let root = tape.weighted_sum(lp, weights);
        let grads = tape.backward(root, Array2::ones((1, 1)));
        (batch, loss, grads)
    };
    if let Some(e) = only_expert {
        let own: std::collections::HashSet<_> = model.expert_param_ids(e)?.into_iter().collect();
        grads.retain(|id| own.contains(&id));
    }
    opt.step(model.params_mut(), &grads);
    Ok((batch, loss))
}

/// Exact (or shot-estimated) expectation of each circuit.
fn score_circuits<T: Real>(circuits: &[Circuit], table: &[T], shots: Option<usize>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let states = circuits.par_iter().map(run_circuit::<T>).collect::<Result<Vec<_>>>()?;
    match shots {
        None => Ok(states.iter().map(|s| expectation_with_table(s, table).as_f64()).collect()),
        Some(shots) => states
            .iter()
            .map(|s| {
                let h = sample_shots(s, shots, rng)?;
                let total: f64 = h.counts.iter().zip(table).map(|(&c, e)| c as f64 * e.as_f64()).sum();
                Ok(total / shots as f64)
            })
            .collect(),
    }
}

/// One preference-optimisation step on a freshly drawn problem.
pub fn train_step<T: Real>(
    model: &mut GqcoModel<T>,
    opt: &mut Adam<T>,
    cfg: &TrainConfig,
    mode: StepMode,
    rng: &mut ChaCha8Rng,
) -> Result<StepMetrics> {
    let n = match mode {
        StepMode::Base { n_max } => sample_size(&size_distribution(n_max)?, rng),
        StepMode::ExpertTune { n } => n,
    };
    let count = cfg.samples_for(n)?;
    let problem = random_problem::<T>(n, rng.random())?;
    let table = energy_table(&problem)?;
    let sampling = SamplingConfig::with_temperature(cfg.t_train);
    let memory = model.encode(&problem)?;
    let circuits: Vec<Circuit> =
        model.sample_with_memory(&memory, n, count, &sampling, rng)?.into_iter().map(|s| s.circuit).collect();
    let expectations = score_circuits(&circuits, &table, cfg.ranking_shots, rng)?;
    let only = match mode {
        StepMode::ExpertTune { n } => Some(n),
        StepMode::Base { .. } => None,
    };
    let (batch, loss) = preference_update(model, opt, cfg, &problem, circuits, expectations, only)?;
    let best = batch.expectations[batch.w_best];
    let gap = if n <= 6 { Some(best - ground_truth_from_table(n, &table).min_energy.as_f64()) } else { None };
    Ok(StepMetrics {
        n,
        loss: loss.value,
        best_expectation: best,
        mean_expectation: batch.expectations.iter().sum::<f64>() / batch.len() as f64,
        optimality_gap: gap,
        best_log_prob: batch.log_probs[batch.w_best],
    })
}

/// Trains only the size-`n` expert for `steps` steps with a fresh optimiser.
pub fn expert_tune<T: Real>(model: &mut GqcoModel<T>, n: usize, cfg: &TrainConfig, steps: u64) -> Result<Vec<StepMetrics>> {
    model.select_expert(n)?;
    let mut opt = Adam::new(cfg.adam.clone());
    (0..steps)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed ^ ((n as u64) << 32), streams::EXPERT_TUNE, s));
            train_step(model, &mut opt, cfg, StepMode::ExpertTune { n }, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests;
