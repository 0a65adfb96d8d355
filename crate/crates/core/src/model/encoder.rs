use ndarray::Array2;

use super::GqcoModel;
use crate::autodiff::{Tape, Var};
use crate::embed::{embed, node_feature_width, ProblemGraph, EDGE_FEATURES};
use crate::error::{GqcoError, Result};
use crate::ising::IsingProblem;
use crate::scalar::Real;

impl<T: Real> GqcoModel<T> {
    fn check_graph(&self, g: &ProblemGraph<T>) -> Result<()> {
        let width = node_feature_width(self.config.max_qubits);
        if g.node_features.dim() != (g.n_nodes, width) {
            return Err(GqcoError::config(format!(
                "node features {:?} do not match ({}, {width})",
                g.node_features.dim(),
                g.n_nodes
            )));
        }
        if g.edge_features.dim() != (g.edge_index.len(), EDGE_FEATURES) {
            return Err(GqcoError::config("edge feature table does not match edge list"));
        }
        if g.n_nodes == 0 {
            return Err(GqcoError::domain("empty graph"));
        }
        Ok(())
    }

    /// Records the encoder on `tape`; returns the `n x d` memory.
    pub fn encode_on_tape(&self, tape: &mut Tape<'_, T>, g: &ProblemGraph<T>) -> Result<Var> {
        self.check_graph(g)?;
        let senders = g.senders();
        let spans = g.incoming_ranges();
        let nodes = tape.input(g.node_features.clone());
        let edges = tape.input(g.edge_features.clone());
        let mut x = self.lin(tape, nodes, &self.node_in);
        let e = self.lin(tape, edges, &self.edge_in);
        for layer in &self.encoder {
            let q = self.lin(tape, x, &layer.w4);
            let xs = tape.gather_rows(x, senders.clone());
            let k_node = self.lin(tape, xs, &layer.w5);
            let k_edge = self.lin(tape, e, &layer.w6);
            let k = tape.add(k_node, k_edge);
            let v_node = self.lin(tape, xs, &layer.w2);
            let v_edge = self.lin(tape, e, &layer.w3);
            let v = tape.add(v_node, v_edge);
            let msg = tape.attend(q, k, v, spans.clone(), self.config.heads);
            let own = self.lin(tape, x, &layer.w1);
            let pre = tape.add(own, msg);
            let v1 = self.norm(tape, pre, &layer.ln1);
            let hidden = self.lin(tape, v1, &layer.w7);
            let hidden = tape.gelu(hidden);
            let ff = self.lin(tape, hidden, &layer.w8);
            let res = tape.add(v1, ff);
            x = self.norm(tape, res, &layer.ln2);
        }
        Ok(x)
    }

    /// Encoder output rows, one per node in index order.
    pub fn encode_graph(&self, g: &ProblemGraph<T>) -> Result<Array2<T>> {
        let mut tape = Tape::new(&self.params);
        let out = self.encode_on_tape(&mut tape, g)?;
        Ok(tape.value(out).clone())
    }

    pub fn encode(&self, p: &IsingProblem<T>) -> Result<Array2<T>> {
        self.check_size(p.n())?;
        self.encode_graph(&embed(p, self.config.max_qubits))
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if n > self.config.max_qubits {
            return Err(GqcoError::config(format!("n={n} exceeds model max_qubits {}", self.config.max_qubits)));
        }
        Ok(())
    }
}
