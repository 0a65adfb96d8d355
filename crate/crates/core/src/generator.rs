//! Circuit sources consumed by evaluation and benchmarking.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{
    argmax_basis, build_vocabulary, expectation_with_table, run_circuit, Angle, Circuit, GateKind, GateSpec, StateVector,
    Vocabulary, END_TOKEN,
};
use crate::error::{GqcoError, Result};
use crate::ising::{brute_force_solve, BitString, IsingProblem, MAX_QUBITS};
use crate::model::{GqcoModel, SamplingConfig};
use crate::scalar::Real;

/// Anything that proposes circuits for a problem.
pub trait CircuitGenerator<T: Real>: Sync {
    fn name(&self) -> &str;

    /// Whether circuits can be produced for `n`-qubit problems.
    fn supports(&self, n: usize) -> bool {
        (2..=MAX_QUBITS).contains(&n)
    }

    /// Proposes `count` circuits at the given sampling temperature.
    fn generate(&self, problem: &IsingProblem<T>, count: usize, temperature: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Circuit>>;
}

impl<T: Real> CircuitGenerator<T> for GqcoModel<T> {
    fn name(&self) -> &str {
        "gqco"
    }

    fn supports(&self, n: usize) -> bool {
        self.select_expert(n).is_ok()
    }

    fn generate(&self, problem: &IsingProblem<T>, count: usize, temperature: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Circuit>> {
        let cfg = SamplingConfig::with_temperature(temperature);
        Ok(self.sample_circuits(problem, count, &cfg, rng)?.into_iter().map(|s| s.circuit).collect())
    }
}

/// The lowest-expectation circuit among a batch of proposals.
#[derive(Clone, Debug)]
pub struct Selection<T> {
    pub circuit: Circuit,
    pub index: usize,
    pub expectation: T,
    pub state: StateVector<T>,
    pub answer: BitString,
}

/// Samples `count` circuits, keeps the lowest expectation (ties to the first) and reads
/// the answer off its most probable basis state.
pub fn select_best<T: Real, G: CircuitGenerator<T> + ?Sized>(
    generator: &G,
    problem: &IsingProblem<T>,
    energies: &[T],
    count: usize,
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Selection<T>> {
    if count == 0 {
        return Err(GqcoError::domain("at least one circuit must be sampled"));
    }
    let mut best: Option<Selection<T>> = None;
    for (index, circuit) in generator.generate(problem, count, temperature, rng)?.into_iter().enumerate() {
        let state = run_circuit::<T>(&circuit)?;
        let e = expectation_with_table(&state, energies);
        if best.as_ref().is_none_or(|b| e < b.expectation) {
            let answer = argmax_basis(&state);
            best = Some(Selection { circuit, index, expectation: e, state, answer });
        }
    }
    best.ok_or_else(|| GqcoError::domain("generator returned no circuits"))
}

/// Uniformly random tokens under the same masks as the model.
#[derive(Clone, Debug)]
pub struct UniformTokenModel {
    vocab: Vocabulary,
    min_gates_before_end: usize,
}

impl Default for UniformTokenModel {
    fn default() -> Self {
        Self { vocab: build_vocabulary(MAX_QUBITS).expect("valid size"), min_gates_before_end: 4 }
    }
}

impl<T: Real> CircuitGenerator<T> for UniformTokenModel {
    fn name(&self) -> &str {
        "uniform"
    }

    fn generate(&self, problem: &IsingProblem<T>, count: usize, _temperature: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Circuit>> {
        let n = problem.n();
        let allowed = self.vocab.tokens_within(n);
        (0..count)
            .map(|_| {
                let mut tokens = vec![END_TOKEN];
                for g in 0..2 * n {
                    let open = if g < self.min_gates_before_end { &allowed[1..] } else { &allowed[..] };
                    let t = open[rng.random_range(0..open.len())];
                    tokens.push(t);
                    if t == END_TOKEN {
                        break;
                    }
                }
                Circuit::from_tokens(&self.vocab, n, tokens)
            })
            .collect()
    }
}

/// Emits a circuit preparing an exact ground state (found by brute force).
#[derive(Clone, Debug)]
pub struct OracleGenerator {
    vocab: Vocabulary,
}

impl Default for OracleGenerator {
    fn default() -> Self {
        Self { vocab: build_vocabulary(MAX_QUBITS).expect("valid size") }
    }
}

impl OracleGenerator {
    /// Bit flips via `RY(pi/3)^3` on the first set qubit and CNOT fan-out, padded with
    /// phase-only `RZ` gates to at least four gates.
    pub fn circuit_for<T: Real>(&self, problem: &IsingProblem<T>) -> Result<Circuit> {
        let n = problem.n();
        if n < 2 {
            return Err(GqcoError::domain("oracle circuits need n >= 2"));
        }
        let truth = brute_force_solve(problem)?;
        let target = truth.ground_states[0];
        let ones: Vec<usize> = (0..n).filter(|&q| target.bit(q)).collect();
        let mut gates = Vec::new();
        if let Some((&first, rest)) = ones.split_first() {
            gates.extend([GateSpec::rotation(GateKind::RY, first, Angle::PlusPiOver3); 3]);
            gates.extend(rest.iter().map(|&q| GateSpec::cnot(first, q)));
        }
        while gates.len() < 4 {
            gates.push(GateSpec::rotation(GateKind::RZ, 0, Angle::PlusPiOver3));
        }
        Circuit::from_gates(&self.vocab, n, gates)
    }
}

impl<T: Real> CircuitGenerator<T> for OracleGenerator {
    fn name(&self) -> &str {
        "oracle"
    }

    fn generate(&self, problem: &IsingProblem<T>, count: usize, _temperature: f64, _rng: &mut ChaCha8Rng) -> Result<Vec<Circuit>> {
        let c = self.circuit_for(problem)?;
        Ok(vec![c; count])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{argmax_basis, run_circuit};
    use crate::ising::{is_correct_solution, random_problem};
    use rand::SeedableRng;

    #[test]
    fn oracle_prepares_a_ground_state() {
        let o = OracleGenerator::default();
        for n in 3..=6 {
            for seed in 0..25 {
                let p = random_problem::<f64>(n, seed).unwrap();
                let c = o.circuit_for(&p).unwrap();
                assert!((4..=2 * n).contains(&c.len()));
                let s = run_circuit::<f64>(&c).unwrap();
                assert!((s.probabilities().iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-12);
                assert!(is_correct_solution(&p, &argmax_basis(&s)).unwrap());
            }
        }
    }

    #[test]
    fn uniform_respects_masks() {
        let u = UniformTokenModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = random_problem::<f64>(4, 0).unwrap();
        for c in CircuitGenerator::<f64>::generate(&u, &p, 500, 1.0, &mut rng).unwrap() {
            assert!((4..=8).contains(&c.len()));
            assert!(c.gates.iter().all(|g| g.max_qubit().is_none_or(|q| q < 4)));
        }
    }
}
