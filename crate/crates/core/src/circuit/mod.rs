//! Gate pool, token vocabulary, statevector simulation and circuit metrics.

mod gate;
mod metrics;
mod state;
mod vocab;

pub use gate::{Angle, Gate, GateJson, GateKind, GateLike, GateSpec};
pub use metrics::{circuit_metrics, CircuitMetrics};
pub use state::{
    apply_gate, argmax_basis, expectation, expectation_with_table, run_circuit, run_gates, run_pool_gates, sample_shots,
    Histogram, StateVector, MAX_SIM_QUBITS,
};
pub use vocab::{build_vocabulary, gates_from_json, vocabulary_size, Circuit, Vocabulary, END_TOKEN, VOCAB_ORDERING_VERSION};
