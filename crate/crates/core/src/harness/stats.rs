//! Depth and CNOT statistics of generated versus QAOA circuits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bench::BenchmarkSpec;
use super::{full_vocabulary, gqco_solve};
use crate::baselines::qaoa_gates;
use crate::circuit::{circuit_metrics, Circuit};
use crate::error::{GqcoError, Result};
use crate::generator::CircuitGenerator;
use crate::scalar::Real;
use crate::seed::{derive_seed, streams};

pub const CIRCUIT_STATS_HEADER: &str =
    "n,gqco_depth,gqco_cnot,gqco_gates,gqco_max_gates,qaoa_depth,qaoa_cnot,qaoa_cnot_decomposed";

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitStatsRow {
    pub n: usize,
    pub gqco_depth: f64,
    pub gqco_cnot: f64,
    pub gqco_gates: f64,
    pub gqco_max_gates: usize,
    pub qaoa_depth: f64,
    pub qaoa_cnot: f64,
    pub qaoa_cnot_decomposed: f64,
}

impl CircuitStatsRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.gqco_depth,
            self.gqco_cnot,
            self.gqco_gates,
            self.gqco_max_gates,
            self.qaoa_depth,
            self.qaoa_cnot,
            self.qaoa_cnot_decomposed
        )
    }
}

/// Per size: means over the selected GQCO circuits (largest sample budget in `spec`) and
/// over one-layer QAOA circuits for the same problems.
pub fn circuit_stats<T: Real, G: CircuitGenerator<T> + ?Sized>(generator: &G, spec: &BenchmarkSpec) -> Result<Vec<CircuitStatsRow>> {
    spec.validate()?;
    let samples = *spec.gqco_samples.iter().max().expect("validated non-empty");
    let vocab = full_vocabulary();
    let mut rows = Vec::new();
    for &n in &spec.sizes {
        if !generator.supports(n) {
            return Err(GqcoError::config(format!("{} has no expert for n = {n}", generator.name())));
        }
        let instances = spec.instances::<T>(n)?;
        let count = instances.len() as f64;
        let mut row = CircuitStatsRow {
            n,
            gqco_depth: 0.0,
            gqco_cnot: 0.0,
            gqco_gates: 0.0,
            gqco_max_gates: 0,
            qaoa_depth: 0.0,
            qaoa_cnot: 0.0,
            qaoa_cnot_decomposed: 0.0,
        };
        for inst in &instances {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, streams::BENCH_SOLVER, inst.seed));
            let rec = gqco_solve(inst, generator, samples, &mut rng)?;
            let circuit = Circuit::from_tokens(&vocab, n, rec.tokens.expect("gqco records carry tokens"))?;
            let m = circuit_metrics(&circuit.gates);
            row.gqco_depth += m.depth as f64 / count;
            row.gqco_cnot += m.cnot_count as f64 / count;
            row.gqco_gates += m.gate_count as f64 / count;
            row.gqco_max_gates = row.gqco_max_gates.max(circuit.gates.len());
            let native = circuit_metrics(&qaoa_gates(&inst.problem, &[0.1, 0.1], false)?);
            let split = circuit_metrics(&qaoa_gates(&inst.problem, &[0.1, 0.1], true)?);
            row.qaoa_depth += native.depth as f64 / count;
            row.qaoa_cnot += native.cnot_count as f64 / count;
            row.qaoa_cnot_decomposed += split.cnot_count as f64 / count;
        }
        rows.push(row);
    }
    Ok(rows)
}
