use std::collections::HashMap;

use super::gate::{Angle, GateJson, GateKind, GateSpec};
use crate::error::{GqcoError, Result};
use crate::ising::MAX_QUBITS;

/// Token index of the identity gate, used as both start and end token.
pub const END_TOKEN: usize = 0;

/// Version tag of the canonical ordering, stored in checkpoints.
pub const VOCAB_ORDERING_VERSION: u32 = 1;

/// Closed-form pool size `4n^2 + 15n + 1`.
pub fn vocabulary_size(n: usize) -> usize {
    4 * n * n + 15 * n + 1
}

/// Token table over the gate pool for `n` qubits.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    n: usize,
    table: Vec<GateSpec>,
    index: HashMap<GateSpec, usize>,
}

/// Canonical ordering: Identity; H per qubit; RX, RY, RZ blocks (qubit-major, then angle);
/// CNOT over ordered pairs row-major; RZZ over ascending pairs times angles.
pub fn build_vocabulary(n: usize) -> Result<Vocabulary> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(GqcoError::domain(format!("vocabulary size n={n} outside 1..={MAX_QUBITS}")));
    }
    let mut table = vec![GateSpec::identity()];
    table.extend((0..n).map(GateSpec::h));
    for kind in [GateKind::RX, GateKind::RY, GateKind::RZ] {
        for q in 0..n {
            table.extend(Angle::ALL.iter().map(|&a| GateSpec::rotation(kind, q, a)));
        }
    }
    for c in 0..n {
        table.extend((0..n).filter(|&t| t != c).map(|t| GateSpec::cnot(c, t)));
    }
    for a in 0..n {
        for b in a + 1..n {
            table.extend(Angle::ALL.iter().map(|&ang| GateSpec::rzz(a, b, ang)));
        }
    }
    let index = table.iter().enumerate().skip(1).map(|(k, g)| (*g, k)).collect();
    Ok(Vocabulary { n, table, index })
}

impl Vocabulary {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn token_to_gate(&self, token: usize) -> Result<GateSpec> {
        self.table
            .get(token)
            .copied()
            .ok_or_else(|| GqcoError::domain(format!("token {token} outside vocabulary of {}", self.len())))
    }

    pub fn gate_to_token(&self, gate: &GateSpec) -> Result<usize> {
        if gate.kind == GateKind::Identity {
            return Ok(END_TOKEN);
        }
        self.index.get(gate).copied().ok_or_else(|| GqcoError::domain(format!("gate {gate:?} not in pool")))
    }

    /// Tokens whose gate touches only qubits `< n_active`, ascending; always includes the end token.
    pub fn tokens_within(&self, n_active: usize) -> Vec<usize> {
        self.table
            .iter()
            .enumerate()
            .filter(|(_, g)| g.max_qubit().is_none_or(|q| q < n_active))
            .map(|(k, _)| k)
            .collect()
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.table
    }
}

/// A generated circuit: the token sequence and its decoded gates.
///
/// `tokens` starts with the start token and ends with the end token whenever
/// generation stopped before the `2n` gate limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<GateSpec>,
    pub tokens: Vec<usize>,
}

impl Circuit {
    /// Decodes a token sequence (`tokens[0]` must be the start token).
    pub fn from_tokens(vocab: &Vocabulary, n: usize, tokens: Vec<usize>) -> Result<Self> {
        if tokens.first() != Some(&END_TOKEN) {
            return Err(GqcoError::domain("token sequence must begin with the start token"));
        }
        let mut gates = Vec::new();
        let mut ended = false;
        for &t in tokens.iter().skip(1) {
            if ended {
                return Err(GqcoError::domain("tokens after the end token"));
            }
            if t == END_TOKEN {
                ended = true;
                continue;
            }
            let g = vocab.token_to_gate(t)?;
            if g.max_qubit().is_some_and(|q| q >= n) {
                return Err(GqcoError::domain(format!("token {t} touches a qubit >= {n}")));
            }
            gates.push(g);
        }
        if gates.len() > 2 * n {
            return Err(GqcoError::domain(format!("{} gates exceed the 2n={} limit", gates.len(), 2 * n)));
        }
        Ok(Self { n, gates, tokens })
    }

    /// Encodes gates as tokens, appending the end token when shorter than `2n`.
    pub fn from_gates(vocab: &Vocabulary, n: usize, gates: Vec<GateSpec>) -> Result<Self> {
        let mut tokens = vec![END_TOKEN];
        for g in &gates {
            tokens.push(vocab.gate_to_token(g)?);
        }
        if gates.len() < 2 * n {
            tokens.push(END_TOKEN);
        }
        Self::from_tokens(vocab, n, tokens)
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn ended_early(&self) -> bool {
        self.tokens.len() > self.gates.len() + 1
    }

    pub fn to_json(&self) -> Vec<GateJson> {
        self.gates.iter().map(GateJson::from).collect()
    }
}

/// Parses a JSON gate list into pool gates.
pub fn gates_from_json(list: &[GateJson]) -> Result<Vec<GateSpec>> {
    list.iter().map(GateSpec::try_from).collect()
}
