//! Summaries of training and benchmark directories.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::bench::read_accuracy_csv;
use super::record::{accuracy_from_records, read_records_csv};
use crate::error::{GqcoError, Result};
use crate::train::{TrainerState, METRICS_HEADER};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunSummary {
    Training {
        step: u64,
        n_max: usize,
        finished: bool,
        best_accuracy: BTreeMap<usize, f64>,
        /// `(step, accuracy)` of every evaluation.
        evaluations: Vec<(u64, f64)>,
        last_loss: Option<f64>,
    },
    Benchmark {
        /// `(solver, n, parameter, accuracy, mean_wall_time)`.
        rows: Vec<(String, usize, u64, f64, f64)>,
        /// Whether `accuracy.csv` equals the recomputation from `records.csv`.
        records_consistent: bool,
    },
}

/// Reads a training run (`state.json`, `metrics.csv`) or a benchmark output
/// (`accuracy.csv`, `records.csv`).
pub fn summarize_run(dir: &Path) -> Result<RunSummary> {
    if dir.join("state.json").exists() {
        let state: TrainerState = serde_json::from_str(&fs::read_to_string(dir.join("state.json"))?)?;
        let metrics = fs::read_to_string(dir.join("metrics.csv"))?;
        let mut lines = metrics.lines();
        if lines.next() != Some(METRICS_HEADER) {
            return Err(GqcoError::Format("metrics.csv has an unexpected header".into()));
        }
        let mut evaluations = Vec::new();
        let mut last_loss = None;
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let (Some(step), Some(loss)) = (f.first().and_then(|s| s.parse().ok()), f.get(3).and_then(|s| s.parse().ok())) else {
                return Err(GqcoError::Format(format!("bad metrics row '{line}'")));
            };
            last_loss = Some(loss);
            if let Some(acc) = f.get(6).and_then(|s| s.parse().ok()) {
                evaluations.push((step, acc));
            }
        }
        return Ok(RunSummary::Training {
            step: state.step,
            n_max: state.curriculum.n_max,
            finished: state.finished,
            best_accuracy: state.best_accuracy,
            evaluations,
            last_loss,
        });
    }
    if dir.join("accuracy.csv").exists() {
        let table = read_accuracy_csv(&fs::read_to_string(dir.join("accuracy.csv"))?)?;
        let records_consistent = match fs::read_to_string(dir.join("records.csv")) {
            Ok(text) => {
                let recomputed = accuracy_from_records(&read_records_csv(&text)?);
                recomputed.len() == table.len() && table.iter().all(|r| recomputed.get(&(r.solver, r.n, r.parameter)) == Some(&r.accuracy))
            }
            Err(_) => false,
        };
        let rows = table.iter().map(|r| (r.solver.to_string(), r.n, r.parameter, r.accuracy, r.mean_wall_time)).collect();
        return Ok(RunSummary::Benchmark { rows, records_consistent });
    }
    Err(GqcoError::config(format!("{} is neither a training run nor a benchmark output", dir.display())))
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Training { step, n_max, finished, best_accuracy, evaluations, last_loss } => {
                writeln!(f, "training run: step {step}, n_max {n_max}, finished {finished}")?;
                if let Some(l) = last_loss {
                    writeln!(f, "last loss {l:.6}")?;
                }
                for (n, a) in best_accuracy {
                    writeln!(f, "best accuracy n={n}: {a:.3}")?;
                }
                if let Some((s, a)) = evaluations.last() {
                    writeln!(f, "last evaluation at step {s}: {a:.3}")?;
                }
                Ok(())
            }
            Self::Benchmark { rows, records_consistent } => {
                writeln!(f, "{:<6} {:>3} {:>9} {:>9} {:>12}", "solver", "n", "parameter", "accuracy", "mean_time_s")?;
                for (s, n, p, a, t) in rows {
                    writeln!(f, "{s:<6} {n:>3} {p:>9} {a:>9.3} {t:>12.3e}")?;
                }
                writeln!(f, "records consistent: {records_consistent}")
            }
        }
    }
}
