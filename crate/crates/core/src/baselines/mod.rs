//! Reference solvers: simulated annealing and QAOA.
//!
//! The exhaustive oracle lives in [`crate::ising`].

mod nelder_mead;
mod qaoa;
mod sa;

use std::time::Instant;

pub use nelder_mead::{Minimum, NelderMead};
pub use qaoa::{qaoa_gates, qaoa_optimize, qaoa_solve, qaoa_state, QaoaConfig, QaoaRun};
pub use sa::{simulated_annealing, simulated_annealing_trace, SaConfig, SaRun};

use crate::error::Result;
use crate::ising::{bits_energy, brute_force_solve, BitString, IsingProblem};
use crate::scalar::Real;

/// Common solver output.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub bits: BitString,
    pub energy: f64,
    pub wall_time: f64,
}

/// Runs `solve` and times it.
pub fn timed<T: Real>(p: &IsingProblem<T>, solve: impl FnOnce(&IsingProblem<T>) -> Result<BitString>) -> Result<SolveOutcome> {
    let start = Instant::now();
    let bits = solve(p)?;
    let wall_time = start.elapsed().as_secs_f64();
    Ok(SolveOutcome { energy: bits_energy(p, &bits)?.as_f64(), bits, wall_time })
}

/// First ground state in index order.
pub fn brute_force_answer<T: Real>(p: &IsingProblem<T>) -> Result<BitString> {
    Ok(brute_force_solve(p)?.ground_states[0])
}

#[cfg(test)]
mod tests;
