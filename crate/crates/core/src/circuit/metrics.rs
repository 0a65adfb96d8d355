use serde::{Deserialize, Serialize};

use super::gate::{GateKind, GateLike};

/// Structural circuit statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitMetrics {
    pub depth: usize,
    pub cnot_count: usize,
    pub gate_count: usize,
}

/// ASAP layering: each gate lands one layer above the busiest of its qubits.
///
/// Identity gates occupy no layer and are not counted; no cancellation is attempted.
pub fn circuit_metrics<G: GateLike>(gates: &[G]) -> CircuitMetrics {
    let mut busy: Vec<usize> = Vec::new();
    let mut m = CircuitMetrics::default();
    for g in gates {
        if g.kind() == GateKind::Identity {
            continue;
        }
        let qs = g.qubits();
        if let Some(&top) = qs.iter().max() {
            if busy.len() <= top {
                busy.resize(top + 1, 0);
            }
        }
        let layer = 1 + qs.iter().map(|&q| busy[q]).max().unwrap_or(0);
        for &q in qs {
            busy[q] = layer;
        }
        m.depth = m.depth.max(layer);
        m.gate_count += 1;
        if g.kind() == GateKind::CNOT {
            m.cnot_count += 1;
        }
    }
    m
}
