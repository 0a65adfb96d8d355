//! Encoder-decoder circuit generator.
//!
//! A graph-transformer encoder reads the problem graph; an autoregressive decoder emits
//! gate tokens. Each decoder feed-forward block and the vocabulary projection belong to a
//! per-size expert selected by the qubit count.

mod checkpoint;
mod decoder;
mod encoder;
mod sampling;

use serde::{Deserialize, Serialize};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{read_tensor_file, write_tensor_file, TensorEntry, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use sampling::{SampledCircuit, SamplingConfig};

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::circuit::{build_vocabulary, Vocabulary};
use crate::embed::{node_feature_width, EDGE_FEATURES};
use crate::error::{GqcoError, Result};
use crate::ising::MAX_QUBITS;
use crate::scalar::Real;

/// Architecture sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub d_ff: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub heads: usize,
    /// Largest supported problem; fixes the vocabulary and feature padding.
    pub max_qubits: usize,
    pub layer_norm_eps: f64,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ModelConfig {
    /// Single-workstation preset.
    pub fn desk() -> Self {
        Self {
            d_model: 64,
            d_ff: 256,
            encoder_layers: 4,
            decoder_layers: 4,
            heads: 4,
            max_qubits: MAX_QUBITS,
            layer_norm_eps: 1e-5,
            init_seed: 0,
        }
    }

    /// Full-size preset (not exercised in tests).
    pub fn paper_scale() -> Self {
        Self { d_model: 256, d_ff: 1024, encoder_layers: 12, decoder_layers: 12, heads: 8, ..Self::desk() }
    }

    /// Tiny preset for unit tests and gradient checks.
    pub fn tiny() -> Self {
        Self { d_model: 8, d_ff: 16, encoder_layers: 1, decoder_layers: 1, heads: 2, ..Self::desk() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.d_ff == 0 || self.heads == 0 {
            return Err(GqcoError::config("model widths and head count must be positive"));
        }
        if self.d_model % self.heads != 0 {
            return Err(GqcoError::config(format!("d_model {} not divisible by {} heads", self.d_model, self.heads)));
        }
        if !(2..=MAX_QUBITS).contains(&self.max_qubits) {
            return Err(GqcoError::config(format!("max_qubits must lie in 2..={MAX_QUBITS}")));
        }
        if self.decoder_layers == 0 {
            return Err(GqcoError::config("at least one decoder layer is required"));
        }
        if !(self.layer_norm_eps > 0.0) {
            return Err(GqcoError::config("layer_norm_eps must be positive"));
        }
        Ok(())
    }

    /// Longest decoder input (start token plus `2 n_max - 1` gates).
    pub fn max_len(&self) -> usize {
        2 * self.max_qubits
    }
}

/// `x W + b` with an optional bias.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Norm {
    pub gain: ParamId,
    pub bias: ParamId,
}

#[derive(Clone, Debug)]
pub(crate) struct EncoderLayer {
    pub w1: Linear,
    pub w2: Linear,
    pub w3: Linear,
    pub w4: Linear,
    pub w5: Linear,
    pub w6: Linear,
    pub ln1: Norm,
    pub w7: Linear,
    pub w8: Linear,
    pub ln2: Norm,
}

#[derive(Clone, Debug)]
pub(crate) struct DecoderLayer {
    pub ln_self: Norm,
    pub self_q: Linear,
    pub self_k: Linear,
    pub self_v: Linear,
    pub self_o: Linear,
    pub ln_cross: Norm,
    pub cross_q: Linear,
    pub cross_k: Linear,
    pub cross_v: Linear,
    pub cross_o: Linear,
    pub ln_ffn: Norm,
}

/// Size-specific parameters: one feed-forward block per decoder layer plus the output head.
#[derive(Clone, Debug)]
pub(crate) struct Expert {
    pub n: usize,
    pub ffn: Vec<(Linear, Linear)>,
    pub out: Linear,
}

/// How a newly registered expert is initialised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpertInit {
    /// Copy the registered expert with the largest size below `n` (or the nearest above if none).
    CopyNearest,
    /// Fresh random weights from the given seed.
    Random(u64),
}

/// The full generator.
#[derive(Clone, Debug)]
pub struct GqcoModel<T: Real> {
    config: ModelConfig,
    vocab: Vocabulary,
    params: ParamStore<T>,
    node_in: Linear,
    edge_in: Linear,
    encoder: Vec<EncoderLayer>,
    tok_emb: ParamId,
    pos_emb: ParamId,
    decoder: Vec<DecoderLayer>,
    final_ln: Norm,
    experts: Vec<Expert>,
}

struct Init<'a, T: Real> {
    store: &'a mut ParamStore<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> Init<'_, T> {
    fn uniform(&mut self, name: String, rows: usize, cols: usize, bound: f64) -> ParamId {
        let rng = &mut self.rng;
        let v = Array2::from_shape_fn((rows, cols), |_| T::lit(rng.random_range(-bound..=bound)));
        self.store.add(name, v)
    }

    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize, bias: bool) -> Linear {
        let bound = (1.0 / fan_in as f64).sqrt();
        let w = self.uniform(format!("{name}.weight"), fan_in, fan_out, bound);
        let b = bias.then(|| self.store.add(format!("{name}.bias"), Array2::zeros((1, fan_out))));
        Linear { w, b }
    }

    fn norm(&mut self, name: &str, d: usize) -> Norm {
        Norm {
            gain: self.store.add(format!("{name}.gain"), Array2::ones((1, d))),
            bias: self.store.add(format!("{name}.bias"), Array2::zeros((1, d))),
        }
    }
}

fn expert_shapes(cfg: &ModelConfig, vocab: usize, n: usize, init: &mut Init<'_, impl Real>) -> Expert {
    let ffn = (0..cfg.decoder_layers)
        .map(|l| {
            (
                init.linear(&format!("expert{n}.{l}.ffn_in"), cfg.d_model, cfg.d_ff, true),
                init.linear(&format!("expert{n}.{l}.ffn_out"), cfg.d_ff, cfg.d_model, true),
            )
        })
        .collect();
    let out = init.linear(&format!("expert{n}.out"), cfg.d_model, vocab, true);
    Expert { n, ffn, out }
}

impl<T: Real> GqcoModel<T> {
    /// Random initialisation with an expert for `first_expert` qubits (usually 3).
    pub fn new(config: ModelConfig, first_expert: usize) -> Result<Self> {
        config.validate()?;
        let vocab = build_vocabulary(config.max_qubits)?;
        let d = config.d_model;
        let mut store = ParamStore::new();
        let mut init = Init { store: &mut store, rng: ChaCha8Rng::seed_from_u64(config.init_seed) };

        let node_in = init.linear("enc.node_in", node_feature_width(config.max_qubits), d, true);
        let edge_in = init.linear("enc.edge_in", EDGE_FEATURES, d, true);
        let encoder = (0..config.encoder_layers)
            .map(|l| {
                let p = |s: &str| format!("enc.{l}.{s}");
                EncoderLayer {
                    w1: init.linear(&p("w1"), d, d, true),
                    w2: init.linear(&p("w2"), d, d, true),
                    w3: init.linear(&p("w3"), d, d, false),
                    w4: init.linear(&p("w4"), d, d, true),
                    w5: init.linear(&p("w5"), d, d, true),
                    w6: init.linear(&p("w6"), d, d, false),
                    ln1: init.norm(&p("ln1"), d),
                    w7: init.linear(&p("w7"), d, config.d_ff, true),
                    w8: init.linear(&p("w8"), config.d_ff, d, true),
                    ln2: init.norm(&p("ln2"), d),
                }
            })
            .collect();
        let tok_emb = init.uniform("dec.tok_emb".into(), vocab.len(), d, 1.0);
        let pos_emb = init.uniform("dec.pos_emb".into(), config.max_len(), d, 1.0);
        let decoder = (0..config.decoder_layers)
            .map(|l| {
                let p = |s: &str| format!("dec.{l}.{s}");
                DecoderLayer {
                    ln_self: init.norm(&p("ln_self"), d),
                    self_q: init.linear(&p("self_q"), d, d, true),
                    self_k: init.linear(&p("self_k"), d, d, true),
                    self_v: init.linear(&p("self_v"), d, d, true),
                    self_o: init.linear(&p("self_o"), d, d, true),
                    ln_cross: init.norm(&p("ln_cross"), d),
                    cross_q: init.linear(&p("cross_q"), d, d, true),
                    cross_k: init.linear(&p("cross_k"), d, d, true),
                    cross_v: init.linear(&p("cross_v"), d, d, true),
                    cross_o: init.linear(&p("cross_o"), d, d, true),
                    ln_ffn: init.norm(&p("ln_ffn"), d),
                }
            })
            .collect();
        let final_ln = init.norm("dec.final_ln", d);
        let mut model = Self {
            config,
            vocab,
            params: ParamStore::new(),
            node_in,
            edge_in,
            encoder,
            tok_emb,
            pos_emb,
            decoder,
            final_ln,
            experts: Vec::new(),
        };
        let seed = model.config.init_seed ^ 0x9e37_79b9_7f4a_7c15;
        model.params = store;
        model.add_expert(first_expert, ExpertInit::Random(seed))?;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    /// Registered expert sizes in registration order.
    pub fn expert_sizes(&self) -> Vec<usize> {
        self.experts.iter().map(|e| e.n).collect()
    }

    /// Index of the expert handling `n`-qubit problems.
    pub fn select_expert(&self, n: usize) -> Result<usize> {
        self.experts
            .iter()
            .position(|e| e.n == n)
            .ok_or_else(|| GqcoError::config(format!("no expert registered for n={n}")))
    }

    /// Registers a new expert for `n`.
    pub fn add_expert(&mut self, n: usize, init: ExpertInit) -> Result<usize> {
        if !(1..=self.config.max_qubits).contains(&n) {
            return Err(GqcoError::config(format!("expert size {n} outside 1..={}", self.config.max_qubits)));
        }
        if self.experts.iter().any(|e| e.n == n) {
            return Err(GqcoError::config(format!("expert for n={n} already registered")));
        }
        let source = match init {
            ExpertInit::CopyNearest => self
                .experts
                .iter()
                .filter(|e| e.n < n)
                .max_by_key(|e| e.n)
                .or_else(|| self.experts.iter().min_by_key(|e| e.n))
                .cloned(),
            ExpertInit::Random(_) => None,
        };
        let seed = match init {
            ExpertInit::Random(s) => s,
            ExpertInit::CopyNearest => 0,
        };
        let vocab = self.vocab.len();
        let mut builder = Init { store: &mut self.params, rng: ChaCha8Rng::seed_from_u64(seed) };
        let expert = expert_shapes(&self.config, vocab, n, &mut builder);
        if let Some(src) = source {
            let pairs: Vec<(ParamId, ParamId)> = expert_ids(&src).into_iter().zip(expert_ids(&expert)).collect();
            for (from, to) in pairs {
                let v = self.params.get(from).clone();
                *self.params.get_mut(to) = v;
            }
        }
        self.experts.push(expert);
        Ok(self.experts.len() - 1)
    }

    /// Parameters owned by the expert for `n`.
    pub fn expert_param_ids(&self, n: usize) -> Result<Vec<ParamId>> {
        Ok(expert_ids(&self.experts[self.select_expert(n)?]))
    }

    /// Parameters shared by every size.
    pub fn shared_param_ids(&self) -> Vec<ParamId> {
        let owned: std::collections::HashSet<ParamId> = self.experts.iter().flat_map(expert_ids).collect();
        self.params.ids().filter(|id| !owned.contains(id)).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.params.scalar_count()
    }

    /// Tokens the decoder may emit for an `n`-qubit problem, optionally intersected with a filter.
    fn allowed_tokens(&self, n: usize, filter: Option<&[usize]>) -> Result<Vec<usize>> {
        let mut allowed = self.vocab.tokens_within(n);
        if let Some(f) = filter {
            allowed.retain(|t| *t == crate::circuit::END_TOKEN || f.contains(t));
        }
        if allowed.len() < 2 {
            return Err(GqcoError::config("gate filter leaves no gate token"));
        }
        Ok(allowed)
    }

    fn lin(&self, t: &mut Tape<'_, T>, x: Var, l: &Linear) -> Var {
        let w = t.param(l.w);
        let y = t.matmul(x, w);
        match l.b {
            Some(b) => {
                let b = t.param(b);
                t.add_row(y, b)
            }
            None => y,
        }
    }

    fn norm(&self, t: &mut Tape<'_, T>, x: Var, n: &Norm) -> Var {
        let g = t.param(n.gain);
        let b = t.param(n.bias);
        t.layer_norm(x, g, b, T::lit(self.config.layer_norm_eps))
    }

    fn lin_value(&self, x: &Array2<T>, l: &Linear) -> Array2<T> {
        let mut y = x.dot(self.params.get(l.w));
        if let Some(b) = l.b {
            y += self.params.get(b);
        }
        y
    }

    fn norm_value(&self, x: &Array2<T>, n: &Norm) -> Array2<T> {
        let eps = T::lit(self.config.layer_norm_eps);
        crate::autodiff::kernels::layer_norm(x, self.params.get(n.gain), self.params.get(n.bias), eps).0
    }
}

fn expert_ids(e: &Expert) -> Vec<ParamId> {
    let mut ids = Vec::new();
    let mut push = |l: &Linear| {
        ids.push(l.w);
        ids.extend(l.b);
    };
    for (a, b) in &e.ffn {
        push(a);
        push(b);
    }
    push(&e.out);
    ids
}

#[cfg(test)]
mod tests;
