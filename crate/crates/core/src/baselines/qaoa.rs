//! QAOA with exact-expectation angle optimisation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nelder_mead::NelderMead;
use crate::circuit::{argmax_basis, expectation_with_table, run_gates, Gate, StateVector, MAX_SIM_QUBITS};
use crate::error::{GqcoError, Result};
use crate::ising::{energy_table, BitString, IsingProblem};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaoaConfig {
    pub layers: usize,
    pub restarts: usize,
    /// Evaluation budget per restart is `evals_per_layer * layers`.
    pub evals_per_layer: usize,
    pub seed: u64,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self { layers: 1, restarts: 5, evals_per_layer: 200, seed: 0 }
    }
}

impl QaoaConfig {
    pub fn with_layers(layers: usize, seed: u64) -> Self {
        Self { layers, seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.restarts == 0 || self.evals_per_layer == 0 {
            return Err(GqcoError::config("QAOA needs layers, restarts and evaluations >= 1"));
        }
        Ok(())
    }
}

/// Angles `[gamma_1..gamma_p, beta_1..beta_p]`.
pub fn qaoa_gates<T: Real>(p: &IsingProblem<T>, angles: &[f64], decompose_rzz: bool) -> Result<Vec<Gate<T>>> {
    if angles.is_empty() || angles.len() % 2 != 0 {
        return Err(GqcoError::domain("QAOA angles come in (gamma, beta) pairs"));
    }
    let layers = angles.len() / 2;
    let two = T::lit(2.0);
    let mut gates: Vec<Gate<T>> = (0..p.n()).map(Gate::h).collect();
    for k in 0..layers {
        let (gamma, beta) = (T::lit(angles[k]), T::lit(angles[layers + k]));
        for (a, b, j) in p.couplings() {
            // exp(-i gamma J Z_a Z_b) = RZZ(2 gamma J)
            if decompose_rzz {
                gates.extend([Gate::cnot(a, b), Gate::rz(b, two * gamma * j), Gate::cnot(a, b)]);
            } else {
                gates.push(Gate::rzz(a, b, two * gamma * j));
            }
        }
        for (q, &h) in p.h().iter().enumerate() {
            gates.push(Gate::rz(q, two * gamma * h));
        }
        for q in 0..p.n() {
            gates.push(Gate::rx(q, two * beta));
        }
    }
    Ok(gates)
}

pub fn qaoa_state<T: Real>(p: &IsingProblem<T>, angles: &[f64]) -> Result<StateVector<T>> {
    run_gates(p.n(), &qaoa_gates(p, angles, false)?)
}

#[derive(Clone, Debug)]
pub struct QaoaRun<T> {
    pub angles: Vec<f64>,
    pub expectation: f64,
    /// Expectation at all-zero angles (the uniform superposition).
    pub start_expectation: f64,
    pub state: StateVector<T>,
    pub answer: BitString,
    pub evals: usize,
}

/// Optimises the angles and reads the answer off the most probable basis state.
///
/// The first restart begins at zero angles, the rest at uniform draws of
/// `gamma in [0, pi)`, `beta in [0, pi/2)`.
pub fn qaoa_optimize<T: Real>(p: &IsingProblem<T>, cfg: &QaoaConfig) -> Result<QaoaRun<T>> {
    cfg.validate()?;
    if p.n() > MAX_SIM_QUBITS {
        return Err(GqcoError::resource(format!("{} qubits exceeds the simulator bound", p.n())));
    }
    let table = energy_table(p)?;
    let objective = |x: &[f64]| -> f64 {
        let s = qaoa_state(p, x).expect("valid angles");
        expectation_with_table(&s, &table).as_f64()
    };
    let pl = cfg.layers;
    let nm = NelderMead { max_evals: cfg.evals_per_layer * pl, ..NelderMead::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let zero = vec![0.0; 2 * pl];
    let start_expectation = objective(&zero);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evals = 0;
    for r in 0..cfg.restarts {
        let x0 = if r == 0 {
            zero.clone()
        } else {
            (0..2 * pl)
                .map(|k| if k < pl { rng.random_range(0.0..std::f64::consts::PI) } else { rng.random_range(0.0..std::f64::consts::FRAC_PI_2) })
                .collect()
        };
        let m = nm.minimize(&x0, objective);
        evals += m.evals;
        if best.as_ref().is_none_or(|b| m.value < b.1) {
            best = Some((m.x, m.value));
        }
    }
    let (angles, expectation) = best.expect("at least one restart");
    let state = qaoa_state(p, &angles)?;
    let answer = argmax_basis(&state);
    Ok(QaoaRun { angles, expectation, start_expectation, state, answer, evals })
}

pub fn qaoa_solve<T: Real>(p: &IsingProblem<T>, cfg: &QaoaConfig) -> Result<BitString> {
    Ok(qaoa_optimize(p, cfg)?.answer)
}
