//! Diagnostics for problems the generator got wrong.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::record::{SolveRecord, SolverKind};
use super::{full_vocabulary, gqco_solve, Instance};
use crate::circuit::{run_circuit, Circuit, GateJson};
use crate::error::{GqcoError, Result};
use crate::generator::CircuitGenerator;
use crate::ising::{energy_table, BitString};
use crate::scalar::Real;
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisRow {
    pub basis: BitString,
    pub probability: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolveAttempt {
    pub samples: usize,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureEntry {
    pub n: usize,
    pub problem: usize,
    pub problem_seed: u64,
    pub samples: u64,
    /// `h_i` on the diagonal, `J_ij` off it.
    pub coefficients: Vec<Vec<f64>>,
    pub circuit: Vec<GateJson>,
    pub answer: BitString,
    pub answer_energy: f64,
    pub min_energy: f64,
    /// `answer_energy - min_energy`.
    pub gap: f64,
    /// Distance from the ground level to the next distinct energy level.
    pub second_best_gap: Option<f64>,
    pub basis_table: Vec<BasisRow>,
    /// Larger budgets tried in order, stopping at the first success.
    pub resolve: Vec<ResolveAttempt>,
}

/// One entry per incorrect GQCO record, in record order.
///
/// `instances` must contain each failed record's problem (matched by size and index).
pub fn failure_report<T: Real, G: CircuitGenerator<T> + ?Sized>(
    records: &[SolveRecord],
    instances: &[Instance<T>],
    generator: &G,
    resolve_budgets: &[usize],
    seed: u64,
) -> Result<Vec<FailureEntry>> {
    let vocab = full_vocabulary();
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.solver == SolverKind::Gqco && !r.correct) {
        let inst = instances
            .iter()
            .find(|i| i.problem.n() == r.n && i.index == r.problem)
            .ok_or_else(|| GqcoError::domain(format!("no instance for failed record n={} problem={}", r.n, r.problem)))?;
        let tokens = r.tokens.clone().ok_or_else(|| GqcoError::domain("GQCO record without a circuit"))?;
        let circuit = Circuit::from_tokens(&vocab, r.n, tokens)?;
        let probs = run_circuit::<T>(&circuit)?.probabilities();
        let table = energy_table(&inst.problem)?;
        let basis_table = probs
            .iter()
            .zip(&table)
            .enumerate()
            .map(|(z, (p, e))| BasisRow { basis: BitString::from_index(r.n, z as u64), probability: p.as_f64(), energy: e.as_f64() })
            .collect();
        let min = inst.truth.min_energy;
        let second = table.iter().copied().filter(|&e| e > min).fold(None, |m: Option<T>, e| Some(m.map_or(e, |m| m.min(e))));
        let mut resolve = Vec::new();
        for (k, &budget) in resolve_budgets.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r.problem_seed, k as u64));
            let correct = gqco_solve(inst, generator, budget, &mut rng)?.correct;
            resolve.push(ResolveAttempt { samples: budget, correct });
            if correct {
                break;
            }
        }
        out.push(FailureEntry {
            n: r.n,
            problem: r.problem,
            problem_seed: r.problem_seed,
            samples: r.parameter,
            coefficients: inst.problem.coefficient_matrix().into_iter().map(|row| row.into_iter().map(Real::as_f64).collect()).collect(),
            circuit: circuit.to_json(),
            answer: r.answer,
            answer_energy: r.energy,
            min_energy: r.min_energy,
            gap: r.energy - r.min_energy,
            second_best_gap: second.map(|s| (s - min).as_f64()),
            basis_table,
            resolve,
        });
    }
    Ok(out)
}
