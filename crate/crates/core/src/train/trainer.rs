//! Resumable training runs with a run directory.
//!
//! Layout: `config.json`, `metrics.csv`, `state.json`, `model.gqco`, `adam.gqco` and
//! `checkpoints/step_<k>_n<n>.gqco`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{curriculum_advance, evaluate_accuracy, train_step, CurriculumState, StepMetrics, StepMode, TrainConfig};
use crate::error::{GqcoError, Result};
use crate::model::{read_tensor_file, write_tensor_file, GqcoModel};
use crate::optim::Adam;
use crate::scalar::Real;
use crate::seed::{derive_seed, streams};

pub const METRICS_HEADER: &str = "step,n_max,n,loss,best_expectation,optimality_gap,accuracy";

/// Persisted loop state besides parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub step: u64,
    pub curriculum: CurriculumState,
    pub best_accuracy: BTreeMap<usize, f64>,
    pub finished: bool,
}

/// One completed step, with the evaluation result when one ran.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub n_max: usize,
    pub metrics: StepMetrics,
    pub accuracy: Option<f64>,
}

impl StepRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.step,
            self.n_max,
            self.metrics.n,
            self.metrics.loss,
            self.metrics.best_expectation,
            opt(self.metrics.optimality_gap),
            opt(self.accuracy)
        )
    }
}

pub struct Trainer<T: Real> {
    pub config: TrainConfig,
    pub model: GqcoModel<T>,
    pub optimizer: Adam<T>,
    pub state: TrainerState,
    dir: Option<PathBuf>,
    pending_rows: String,
}

impl<T: Real> Trainer<T> {
    /// In-memory trainer from random initialisation.
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let model = GqcoModel::new(config.model.clone(), 3)?;
        Ok(Self {
            optimizer: Adam::new(config.adam.clone()),
            model,
            state: TrainerState {
                step: 0,
                curriculum: CurriculumState::default(),
                best_accuracy: BTreeMap::new(),
                finished: false,
            },
            config,
            dir: None,
            pending_rows: String::new(),
        })
    }

    /// Starts a fresh run directory (which must not already hold a run).
    pub fn create(config: TrainConfig, dir: &Path) -> Result<Self> {
        let mut t = Self::new(config)?;
        if dir.join("config.json").exists() {
            return Err(GqcoError::config(format!("{} already holds a run; resume it instead", dir.display())));
        }
        fs::create_dir_all(dir.join("checkpoints"))?;
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(&t.config)?)?;
        fs::write(dir.join("metrics.csv"), format!("{METRICS_HEADER}\n"))?;
        t.dir = Some(dir.to_path_buf());
        t.persist()?;
        Ok(t)
    }

    /// Reopens a run at its last persisted step; later metric rows are discarded.
    pub fn resume(dir: &Path) -> Result<Self> {
        let config: TrainConfig = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
        config.validate()?;
        let state: TrainerState = serde_json::from_str(&fs::read_to_string(dir.join("state.json"))?)?;
        let model = GqcoModel::<T>::load(&dir.join("model.gqco"))?;
        let optimizer = load_adam(&dir.join("adam.gqco"), &config, model.params().len())?;
        let metrics = fs::read_to_string(dir.join("metrics.csv"))?;
        let mut kept = String::new();
        for line in metrics.lines() {
            let keep = match line.split(',').next().and_then(|s| s.parse::<u64>().ok()) {
                Some(step) => step <= state.step,
                None => line == METRICS_HEADER,
            };
            if keep {
                kept.push_str(line);
                kept.push('\n');
            }
        }
        fs::write(dir.join("metrics.csv"), kept)?;
        Ok(Self { config, model, optimizer, state, dir: Some(dir.to_path_buf()), pending_rows: String::new() })
    }

    pub fn run_dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn is_finished(&self) -> bool {
        self.state.finished
    }

    /// Runs one step (and the periodic evaluation).
    pub fn step_once(&mut self) -> Result<StepRecord> {
        let step = self.state.step + 1;
        let n_max = self.state.curriculum.n_max;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, streams::TRAIN_STEP, step));
        let metrics = train_step(&mut self.model, &mut self.optimizer, &self.config, StepMode::Base { n_max }, &mut rng)?;
        self.state.step = step;
        let mut accuracy = None;
        if step % self.config.eval_frequency == 0 {
            let acc = self.evaluate(n_max)?;
            accuracy = Some(acc);
            let improved = self.state.best_accuracy.get(&n_max).is_none_or(|&b| acc > b);
            if improved {
                self.state.best_accuracy.insert(n_max, acc);
            }
            let passed = acc > self.config.accuracy_threshold;
            if passed && n_max >= self.config.final_n {
                self.state.curriculum.history.entry(n_max).or_default().push((step, acc));
                self.state.finished = true;
            } else {
                self.state.curriculum =
                    curriculum_advance(&self.state.curriculum, step, acc, self.config.accuracy_threshold, &mut self.model)?;
            }
            if improved || passed {
                self.save_checkpoint(&format!("step_{step}_n{n_max}"))?;
            }
        }
        if step >= self.config.max_steps {
            self.state.finished = true;
        }
        let record = StepRecord { step, n_max, metrics, accuracy };
        writeln!(self.pending_rows, "{}", record.csv_row()).expect("string write");
        if accuracy.is_some() || self.state.finished {
            self.persist()?;
        }
        Ok(record)
    }

    /// Steps until finished or `limit` further steps have run.
    pub fn run(&mut self, limit: Option<u64>, mut observe: impl FnMut(&StepRecord)) -> Result<()> {
        let mut done = 0;
        while !self.state.finished && limit.is_none_or(|l| done < l) {
            let r = self.step_once()?;
            observe(&r);
            done += 1;
        }
        self.persist()
    }

    /// Accuracy at `n` on the run's fixed evaluation set.
    pub fn evaluate(&self, n: usize) -> Result<f64> {
        evaluate_accuracy(&self.model, n, self.config.eval_problems, self.config.eval_samples, self.config.t_eval, self.config.seed)
    }

    fn save_checkpoint(&self, name: &str) -> Result<()> {
        if let Some(dir) = &self.dir {
            self.model.save(&dir.join("checkpoints").join(format!("{name}.gqco")))?;
        }
        Ok(())
    }

    /// Flushes metric rows and writes resumable state.
    pub fn persist(&mut self) -> Result<()> {
        let Some(dir) = self.dir.clone() else {
            self.pending_rows.clear();
            return Ok(());
        };
        if !self.pending_rows.is_empty() {
            let mut f = fs::OpenOptions::new().append(true).open(dir.join("metrics.csv"))?;
            f.write_all(self.pending_rows.as_bytes())?;
            self.pending_rows.clear();
        }
        self.model.save(&dir.join("model.gqco"))?;
        save_adam(&dir.join("adam.gqco"), &self.optimizer)?;
        let tmp = dir.join("state.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&self.state)?)?;
        fs::rename(tmp, dir.join("state.json"))?;
        Ok(())
    }
}

fn save_adam<T: Real>(path: &Path, opt: &Adam<T>) -> Result<()> {
    let (m, v, steps) = opt.state();
    let names: Vec<(String, usize)> = (0..m.len()).filter(|&i| m[i].is_some()).map(|i| (i.to_string(), i)).collect();
    let mut tensors: Vec<(String, &Array2<T>)> = Vec::new();
    for (name, i) in &names {
        tensors.push((format!("m.{name}"), m[*i].as_ref().expect("present")));
        tensors.push((format!("v.{name}"), v[*i].as_ref().expect("present")));
    }
    let refs: Vec<(&str, &Array2<T>)> = tensors.iter().map(|(n, a)| (n.as_str(), *a)).collect();
    write_tensor_file(path, json!({ "kind": "adam", "steps": steps }), &refs)
}

fn load_adam<T: Real>(path: &Path, cfg: &TrainConfig, params: usize) -> Result<Adam<T>> {
    let (meta, tensors) = read_tensor_file::<T>(path)?;
    if meta.get("kind").and_then(|k| k.as_str()) != Some("adam") {
        return Err(GqcoError::Format(format!("{} is not an optimiser state", path.display())));
    }
    let mut steps: Vec<u64> = serde_json::from_value(meta["steps"].clone())?;
    steps.resize(params.max(steps.len()), 0);
    let mut m = vec![None; steps.len()];
    let mut v = vec![None; steps.len()];
    for (name, a) in tensors {
        let (kind, idx) = name.split_once('.').ok_or_else(|| GqcoError::Format(format!("bad tensor name {name}")))?;
        let i: usize = idx.parse().map_err(|_| GqcoError::Format(format!("bad tensor name {name}")))?;
        if i >= m.len() {
            return Err(GqcoError::Format(format!("optimiser tensor {name} beyond parameter count")));
        }
        match kind {
            "m" => m[i] = Some(a),
            "v" => v[i] = Some(a),
            _ => return Err(GqcoError::Format(format!("bad tensor name {name}"))),
        }
    }
    Ok(Adam::from_state(cfg.adam.clone(), m, v, steps))
}
