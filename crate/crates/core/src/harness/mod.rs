//! Benchmark protocols, persisted solve records and reports.

mod bench;
mod demo;
mod failure;
mod record;
mod report;
mod stats;

use std::time::Instant;

use rand_chacha::ChaCha8Rng;

pub use bench::{
    interpolate_time_to_90, read_accuracy_csv, run_benchmark, AccuracyRow, BenchmarkResult, BenchmarkSpec, BruteRow,
    TimeTo90Row, ACCURACY_HEADER, BRUTE_HEADER, TIME_TO_90_HEADER,
};
pub use demo::{maxcut_demo, maxcut_problem, MaxcutReport, ShotOutcome, SolverShots, DEMO_EDGES, DEMO_SHOTS};
pub use failure::{failure_report, BasisRow, FailureEntry, ResolveAttempt};
pub use record::{accuracy_from_records, read_records_csv, records_csv, replay_record, SolveRecord, SolverKind, RECORD_HEADER};
pub use report::{summarize_run, RunSummary};
pub use stats::{circuit_stats, CircuitStatsRow, CIRCUIT_STATS_HEADER};

use crate::circuit::Vocabulary;
use crate::error::Result;
use crate::generator::{select_best, CircuitGenerator};
use crate::ising::{brute_force_solve, energy_table, is_correct_against, random_problem, GroundTruth, IsingProblem};
use crate::scalar::Real;

/// Sampling temperature used when solving.
pub const SOLVE_TEMPERATURE: f64 = 2.0;

/// A benchmark problem with its oracle answer.
#[derive(Clone, Debug)]
pub struct Instance<T> {
    pub index: usize,
    pub seed: u64,
    pub problem: IsingProblem<T>,
    pub truth: GroundTruth<T>,
}

impl<T: Real> Instance<T> {
    pub fn random(n: usize, index: usize, seed: u64) -> Result<Self> {
        let problem = random_problem(n, seed)?;
        Self::from_problem(problem, index, seed)
    }

    pub fn from_problem(problem: IsingProblem<T>, index: usize, seed: u64) -> Result<Self> {
        let truth = brute_force_solve(&problem)?;
        Ok(Self { index, seed, problem, truth })
    }
}

/// Samples `num_samples` circuits at `T = 2`, keeps the lowest expectation and answers
/// with its most probable basis state. The wall time covers sampling and simulation.
pub fn gqco_solve<T: Real, G: CircuitGenerator<T> + ?Sized>(
    instance: &Instance<T>,
    generator: &G,
    num_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SolveRecord> {
    let start = Instant::now();
    let table = energy_table(&instance.problem)?;
    let sel = select_best(generator, &instance.problem, &table, num_samples, SOLVE_TEMPERATURE, rng)?;
    let wall_time = start.elapsed().as_secs_f64();
    let energy = table[sel.answer.index() as usize].as_f64();
    Ok(SolveRecord {
        solver: SolverKind::Gqco,
        n: instance.problem.n(),
        problem: instance.index,
        problem_seed: instance.seed,
        parameter: num_samples as u64,
        correct: is_correct_against(&instance.problem, &instance.truth, &sel.answer)?,
        answer: sel.answer,
        energy,
        min_energy: instance.truth.min_energy.as_f64(),
        wall_time,
        expectation: Some(sel.expectation.as_f64()),
        tokens: Some(sel.circuit.tokens),
        angles: None,
    })
}

pub(crate) fn full_vocabulary() -> Vocabulary {
    crate::circuit::build_vocabulary(crate::ising::MAX_QUBITS).expect("valid size")
}

pub(crate) fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

#[cfg(test)]
mod tests;
