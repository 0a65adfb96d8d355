//! Six-node weighted max-cut under finite shot budgets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::record::SolverKind;
use super::{full_vocabulary, gqco_solve, Instance};
use crate::baselines::{qaoa_optimize, QaoaConfig};
use crate::circuit::{run_circuit, sample_shots, Circuit, StateVector};
use crate::error::{GqcoError, Result};
use crate::generator::CircuitGenerator;
use crate::ising::{BitString, GroundTruth, IsingProblem};
use crate::scalar::Real;
use crate::seed::derive_seed;

/// `(i, j, weight)` of the demo graph; its maximum cuts are `111000` and `000111`.
pub const DEMO_EDGES: [(usize, usize, f64); 9] =
    [(0, 2, 2.0), (0, 3, 2.0), (0, 4, 2.0), (0, 5, 1.0), (1, 4, 2.0), (1, 5, 1.0), (2, 3, 1.0), (2, 5, 2.0), (3, 4, 1.0)];

pub const DEMO_SHOTS: [usize; 4] = [1, 10, 100, 1000];

/// Minimising `sum w_ij s_i s_j` maximises the cut; couplings are `w / max w`, fields zero.
pub fn maxcut_problem<T: Real>(n: usize, edges: &[(usize, usize, f64)]) -> Result<IsingProblem<T>> {
    let max_w = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    if max_w <= 0.0 {
        return Err(GqcoError::domain("max-cut needs a positive edge weight"));
    }
    IsingProblem::new(vec![T::zero(); n], edges.iter().map(|&(i, j, w)| (i, j, T::lit(w / max_w))))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShotOutcome {
    pub shots: usize,
    pub mode: BitString,
    pub correct: bool,
    /// Non-zero bins as `(basis, count)`.
    pub histogram: Vec<(BitString, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverShots {
    pub solver: SolverKind,
    pub answer: BitString,
    pub correct: bool,
    /// Total probability on ground states.
    pub ground_state_mass: f64,
    pub shots: Vec<ShotOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxcutReport {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub ground_states: Vec<BitString>,
    pub degeneracy: usize,
    /// Every ground state's complement is also a ground state.
    pub complement_closed: bool,
    pub solvers: Vec<SolverShots>,
}

fn shots_for<T: Real>(kind: SolverKind, answer: BitString, state: &StateVector<T>, truth: &GroundTruth<T>, seed: u64) -> Result<SolverShots> {
    let probs = state.probabilities();
    let ground_state_mass = truth.ground_states.iter().map(|b| probs[b.index() as usize].as_f64()).sum();
    let mut shots = Vec::new();
    for (k, &s) in DEMO_SHOTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, kind as u64, k as u64));
        let hist = sample_shots(state, s, &mut rng)?;
        let histogram = hist
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(z, &c)| (BitString::from_index(hist.n, z as u64), c))
            .collect();
        let mode = hist.mode();
        shots.push(ShotOutcome { shots: s, mode, correct: truth.is_ground_state(&mode), histogram });
    }
    Ok(SolverShots { solver: kind, correct: truth.is_ground_state(&answer), answer, ground_state_mass, shots })
}

/// Solves the demo instance with the generator (100 samples) and 2-layer QAOA and reads
/// both final states at every shot budget.
pub fn maxcut_demo<T: Real, G: CircuitGenerator<T> + ?Sized>(generator: &G, seed: u64) -> Result<MaxcutReport> {
    let n = 6;
    if !generator.supports(n) {
        return Err(GqcoError::config(format!("{} has no expert for n = {n}", generator.name())));
    }
    let inst = Instance::from_problem(maxcut_problem::<T>(n, &DEMO_EDGES)?, 0, seed)?;
    let truth = &inst.truth;
    let complement_closed = truth.ground_states.iter().all(|b| truth.is_ground_state(&b.complement()));

    let rec = gqco_solve(&inst, generator, 100, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let circuit = Circuit::from_tokens(&full_vocabulary(), n, rec.tokens.expect("gqco records carry tokens"))?;
    let gqco = shots_for(SolverKind::Gqco, rec.answer, &run_circuit::<T>(&circuit)?, truth, seed)?;

    let q = qaoa_optimize(&inst.problem, &QaoaConfig::with_layers(2, seed))?;
    let qaoa = shots_for(SolverKind::Qaoa, q.answer, &q.state, truth, seed)?;

    Ok(MaxcutReport {
        n,
        edges: DEMO_EDGES.to_vec(),
        degeneracy: truth.degeneracy(),
        ground_states: truth.ground_states.clone(),
        complement_closed,
        solvers: vec![gqco, qaoa],
    })
}
