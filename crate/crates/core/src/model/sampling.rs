use std::ops::Range;

use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::decoder::column_lookup;
use super::{Expert, GqcoModel};
use crate::autodiff::kernels;
use crate::circuit::{Circuit, END_TOKEN};
use crate::error::{GqcoError, Result};
use crate::ising::IsingProblem;
use crate::scalar::Real;

/// Decoding controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    /// Argmax decoding instead of sampling (log-probs still use `temperature`).
    pub greedy: bool,
    pub min_gates_before_end: usize,
    /// Optional subset of gate tokens the decoder may use.
    pub gate_filter: Option<Vec<usize>>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { temperature: 1.0, greedy: false, min_gates_before_end: 4, gate_filter: None }
    }
}

impl SamplingConfig {
    pub fn with_temperature(temperature: f64) -> Self {
        Self { temperature, ..Self::default() }
    }

    pub fn greedy() -> Self {
        Self { greedy: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(GqcoError::config(format!("temperature must be positive, got {}", self.temperature)));
        }
        Ok(())
    }
}

/// A generated circuit with its log-probability under the sampling temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledCircuit {
    pub circuit: Circuit,
    pub log_prob: f64,
}

/// Incremental decoder state for a batch of sequences sharing one memory.
struct Incremental<'m, T: Real> {
    model: &'m GqcoModel<T>,
    expert: &'m Expert,
    batch: usize,
    cap: usize,
    step: usize,
    self_k: Vec<Array2<T>>,
    self_v: Vec<Array2<T>>,
    cross_k: Vec<Array2<T>>,
    cross_v: Vec<Array2<T>>,
    mem_rows: usize,
    w_out: Array2<T>,
    b_out: Option<Array2<T>>,
    inv_temp: T,
}

impl<'m, T: Real> Incremental<'m, T> {
    fn new(model: &'m GqcoModel<T>, memory: &Array2<T>, n: usize, batch: usize, allowed: &[usize], temperature: f64) -> Result<Self> {
        let expert = &model.experts[model.select_expert(n)?];
        let d = model.config.d_model;
        let cap = (2 * n).max(1);
        let layers = model.decoder.len();
        let cross_k = model.decoder.iter().map(|l| model.lin_value(memory, &l.cross_k)).collect();
        let cross_v = model.decoder.iter().map(|l| model.lin_value(memory, &l.cross_v)).collect();
        let w_out = model.params.get(expert.out.w).select(Axis(1), allowed);
        let b_out = expert.out.b.map(|b| model.params.get(b).select(Axis(1), allowed));
        Ok(Self {
            model,
            expert,
            batch,
            cap,
            step: 0,
            self_k: vec![Array2::zeros((batch * cap, d)); layers],
            self_v: vec![Array2::zeros((batch * cap, d)); layers],
            cross_k,
            cross_v,
            mem_rows: memory.nrows(),
            w_out,
            b_out,
            inv_temp: T::one() / T::lit(temperature),
        })
    }

    /// Feeds one token per sequence at the next position; returns temperature-scaled logits.
    fn step(&mut self, tokens: &[usize]) -> Array2<T> {
        let m = self.model;
        let t = self.step;
        assert!(t < self.cap, "decoder capacity exceeded");
        let heads = m.config.heads;
        let x_tok = m.params.get(m.tok_emb).select(Axis(0), tokens);
        let x_pos = m.params.get(m.pos_emb).select(Axis(0), &vec![t; tokens.len()]);
        let mut x = &x_tok + &x_pos;
        let spans: Vec<Range<usize>> = (0..self.batch).map(|b| b * self.cap..b * self.cap + t + 1).collect();
        let mem_spans = vec![0..self.mem_rows; self.batch];
        for (l, layer) in m.decoder.iter().enumerate() {
            let h = m.norm_value(&x, &layer.ln_self);
            let q = m.lin_value(&h, &layer.self_q);
            let k = m.lin_value(&h, &layer.self_k);
            let v = m.lin_value(&h, &layer.self_v);
            for b in 0..self.batch {
                self.self_k[l].row_mut(b * self.cap + t).assign(&k.row(b));
                self.self_v[l].row_mut(b * self.cap + t).assign(&v.row(b));
            }
            let (a, _) = kernels::attend(q.view(), self.self_k[l].view(), self.self_v[l].view(), &spans, heads);
            x = &x + &m.lin_value(&a, &layer.self_o);

            let h = m.norm_value(&x, &layer.ln_cross);
            let q = m.lin_value(&h, &layer.cross_q);
            let (a, _) = kernels::attend(q.view(), self.cross_k[l].view(), self.cross_v[l].view(), &mem_spans, heads);
            x = &x + &m.lin_value(&a, &layer.cross_o);

            let h = m.norm_value(&x, &layer.ln_ffn);
            let (f_in, f_out) = &self.expert.ffn[l];
            let f = kernels::gelu(&m.lin_value(&h, f_in));
            x = &x + &m.lin_value(&f, f_out);
        }
        let h = m.norm_value(&x, &m.final_ln);
        let mut logits = h.dot(&self.w_out);
        if let Some(b) = &self.b_out {
            logits = &logits + b;
        }
        self.step += 1;
        logits * self.inv_temp
    }
}

/// Draws an index from `probs` (which sum to about one) by inverse CDF.
fn draw<R: Rng + ?Sized>(lp: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &l) in lp.iter().enumerate() {
        if l == f64::NEG_INFINITY {
            continue;
        }
        acc += l.exp();
        last = Some(i);
        if u < acc {
            return i;
        }
    }
    last.expect("at least one open column")
}

fn argmax(lp: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in lp.iter().enumerate() {
        if l > lp[best] {
            best = i;
        }
    }
    best
}

impl<T: Real> GqcoModel<T> {
    /// Samples `count` circuits for an `n`-qubit problem from an encoder memory.
    pub fn sample_with_memory<R: Rng + ?Sized>(
        &self,
        memory: &Array2<T>,
        n: usize,
        count: usize,
        cfg: &SamplingConfig,
        rng: &mut R,
    ) -> Result<Vec<SampledCircuit>> {
        cfg.validate()?;
        if memory.nrows() != n {
            return Err(GqcoError::config("memory rows differ from problem size"));
        }
        if count == 0 {
            return Ok(Vec::new());
        }
        let allowed = self.allowed_tokens(n, cfg.gate_filter.as_deref())?;
        let mut dec = Incremental::new(self, memory, n, count, &allowed, cfg.temperature)?;
        let mut seqs: Vec<Vec<usize>> = vec![vec![END_TOKEN]; count];
        let mut log_probs = vec![0.0f64; count];
        let mut done = vec![false; count];
        let blocked_end = [vec![0usize]];
        let open: [Vec<usize>; 1] = [Vec::new()];
        for t in 0..2 * n {
            let inputs: Vec<usize> = seqs.iter().map(|s| *s.last().expect("non-empty")).collect();
            let logits = dec.step(&inputs);
            let block = if t < cfg.min_gates_before_end { &blocked_end } else { &open };
            for b in 0..count {
                if done[b] {
                    continue;
                }
                let row = logits.row(b).to_owned().insert_axis(Axis(0));
                let lp = kernels::masked_log_softmax(&row, block);
                let lp: Vec<f64> = lp.iter().map(|v| v.as_f64()).collect();
                let c = if cfg.greedy { argmax(&lp) } else { draw(&lp, rng) };
                log_probs[b] += lp[c];
                let token = allowed[c];
                seqs[b].push(token);
                if token == END_TOKEN || t + 1 == 2 * n {
                    done[b] = true;
                }
            }
            if done.iter().all(|&d| d) {
                break;
            }
        }
        seqs.into_iter()
            .zip(log_probs)
            .map(|(tokens, log_prob)| Ok(SampledCircuit { circuit: Circuit::from_tokens(&self.vocab, n, tokens)?, log_prob }))
            .collect()
    }

    /// Samples `count` circuits for `problem`.
    pub fn sample_circuits<R: Rng + ?Sized>(
        &self,
        problem: &IsingProblem<T>,
        count: usize,
        cfg: &SamplingConfig,
        rng: &mut R,
    ) -> Result<Vec<SampledCircuit>> {
        self.select_expert(problem.n())?;
        let memory = self.encode(problem)?;
        self.sample_with_memory(&memory, problem.n(), count, cfg, rng)
    }

    pub fn sample_circuit<R: Rng + ?Sized>(&self, problem: &IsingProblem<T>, cfg: &SamplingConfig, rng: &mut R) -> Result<SampledCircuit> {
        Ok(self.sample_circuits(problem, 1, cfg, rng)?.remove(0))
    }

    /// Next-token logits over the full vocabulary after `prefix`, masked tokens at `-inf`.
    pub fn decode_logits(&self, problem: &IsingProblem<T>, prefix: &[usize], cfg: &SamplingConfig) -> Result<Vec<T>> {
        cfg.validate()?;
        let n = problem.n();
        if prefix.first() != Some(&END_TOKEN) {
            return Err(GqcoError::domain("prefix must begin with the start token"));
        }
        if prefix.len() > 2 * n {
            return Err(GqcoError::domain(format!("prefix of {} tokens is too long for n={n}", prefix.len())));
        }
        let allowed = self.allowed_tokens(n, cfg.gate_filter.as_deref())?;
        let col = column_lookup(self.vocab.len(), &allowed);
        if let Some(&bad) = prefix[1..].iter().find(|&&t| t == END_TOKEN || col.get(t).copied().flatten().is_none()) {
            return Err(GqcoError::domain(format!("token {bad} is not a valid prefix gate")));
        }
        let memory = self.encode(problem)?;
        let mut dec = Incremental::new(self, &memory, n, 1, &allowed, cfg.temperature)?;
        let mut logits = Array2::zeros((1, allowed.len()));
        for &tok in prefix {
            logits = dec.step(&[tok]);
        }
        let mut full = vec![T::neg_infinity(); self.vocab.len()];
        for (c, &t) in allowed.iter().enumerate() {
            full[t] = logits[[0, c]];
        }
        if prefix.len() - 1 < cfg.min_gates_before_end {
            full[END_TOKEN] = T::neg_infinity();
        }
        Ok(full)
    }
}
