use std::ops::Range;

use super::{GqcoModel, SamplingConfig};
use crate::autodiff::{Tape, Var};
use crate::circuit::END_TOKEN;
use crate::error::{GqcoError, Result};
use crate::ising::IsingProblem;
use crate::scalar::Real;

/// Maps vocabulary tokens to columns of the restricted output head.
pub(crate) fn column_lookup(vocab_len: usize, allowed: &[usize]) -> Vec<Option<usize>> {
    let mut col = vec![None; vocab_len];
    for (c, &t) in allowed.iter().enumerate() {
        col[t] = Some(c);
    }
    col
}

impl<T: Real> GqcoModel<T> {
    /// Checks a full token sequence against the masks; returns target columns.
    fn check_sequence(&self, n: usize, seq: &[usize], col: &[Option<usize>], cfg: &SamplingConfig) -> Result<Vec<usize>> {
        if seq.first() != Some(&END_TOKEN) || seq.len() < 2 {
            return Err(GqcoError::domain("sequence must start with the start token and contain a prediction"));
        }
        let mut targets = Vec::with_capacity(seq.len() - 1);
        for (i, &t) in seq.iter().enumerate().skip(1) {
            let gates_before = i - 1;
            let c = col
                .get(t)
                .copied()
                .flatten()
                .ok_or_else(|| GqcoError::domain(format!("token {t} is masked for n={n}")))?;
            if t == END_TOKEN {
                if gates_before < cfg.min_gates_before_end {
                    return Err(GqcoError::domain(format!("end token after only {gates_before} gates")));
                }
                if i != seq.len() - 1 {
                    return Err(GqcoError::domain("tokens after the end token"));
                }
            } else if gates_before >= 2 * n {
                return Err(GqcoError::domain(format!("more than 2n={} gates", 2 * n)));
            }
            targets.push(c);
        }
        let gates = seq.len() - 1 - usize::from(seq.last() == Some(&END_TOKEN));
        if seq.last() != Some(&END_TOKEN) && gates != 2 * n {
            return Err(GqcoError::domain("unterminated sequence shorter than 2n gates"));
        }
        Ok(targets)
    }

    /// Teacher-forced log-probabilities of whole sequences, as a `batch x 1` tape node.
    pub fn sequence_log_probs_on_tape(
        &self,
        tape: &mut Tape<'_, T>,
        memory: Var,
        n: usize,
        seqs: &[Vec<usize>],
        cfg: &SamplingConfig,
    ) -> Result<Var> {
        cfg.validate()?;
        let expert = &self.experts[self.select_expert(n)?];
        if tape.value(memory).nrows() != n {
            return Err(GqcoError::config("memory rows differ from problem size"));
        }
        let allowed = self.allowed_tokens(n, cfg.gate_filter.as_deref())?;
        let col = column_lookup(self.vocab.len(), &allowed);

        let mut inputs = Vec::new();
        let mut positions = Vec::new();
        let mut targets = Vec::new();
        let mut blocked = Vec::new();
        let mut spans: Vec<Range<usize>> = Vec::new();
        let mut segments = Vec::with_capacity(seqs.len());
        for seq in seqs {
            let tcols = self.check_sequence(n, seq, &col, cfg)?;
            let start = inputs.len();
            for (i, &c) in tcols.iter().enumerate() {
                inputs.push(seq[i]);
                positions.push(i);
                targets.push(c);
                blocked.push(if i < cfg.min_gates_before_end { vec![0] } else { Vec::new() });
                spans.push(start..start + i + 1);
            }
            segments.push(start..inputs.len());
        }
        let rows = inputs.len();
        let heads = self.config.heads;

        let tok = tape.param(self.tok_emb);
        let x_tok = tape.gather_rows(tok, inputs);
        let pos = tape.param(self.pos_emb);
        let x_pos = tape.gather_rows(pos, positions);
        let mut x = tape.add(x_tok, x_pos);
        let mem_spans = vec![0..n; rows];
        for (l, layer) in self.decoder.iter().enumerate() {
            let h = self.norm(tape, x, &layer.ln_self);
            let q = self.lin(tape, h, &layer.self_q);
            let k = self.lin(tape, h, &layer.self_k);
            let v = self.lin(tape, h, &layer.self_v);
            let a = tape.attend(q, k, v, spans.clone(), heads);
            let o = self.lin(tape, a, &layer.self_o);
            x = tape.add(x, o);

            let h = self.norm(tape, x, &layer.ln_cross);
            let q = self.lin(tape, h, &layer.cross_q);
            let k = self.lin(tape, memory, &layer.cross_k);
            let v = self.lin(tape, memory, &layer.cross_v);
            let a = tape.attend(q, k, v, mem_spans.clone(), heads);
            let o = self.lin(tape, a, &layer.cross_o);
            x = tape.add(x, o);

            let h = self.norm(tape, x, &layer.ln_ffn);
            let (f_in, f_out) = &expert.ffn[l];
            let f = self.lin(tape, h, f_in);
            let f = tape.gelu(f);
            let f = self.lin(tape, f, f_out);
            x = tape.add(x, f);
        }
        let h = self.norm(tape, x, &self.final_ln);
        let w = tape.param(expert.out.w);
        let w = tape.gather_cols(w, allowed.clone());
        let mut logits = tape.matmul(h, w);
        if let Some(b) = expert.out.b {
            let b = tape.param(b);
            let b = tape.gather_cols(b, allowed);
            logits = tape.add_row(logits, b);
        }
        let logits = tape.scale(logits, T::one() / T::lit(cfg.temperature));
        let lp = tape.pick_log_softmax(logits, targets, &blocked);
        Ok(tape.segment_sum(lp, segments))
    }

    /// Log-probability of `tokens` (start token first) given `problem`.
    pub fn sequence_log_prob(&self, problem: &IsingProblem<T>, tokens: &[usize], cfg: &SamplingConfig) -> Result<T> {
        let mut all = self.sequence_log_probs(problem, &[tokens.to_vec()], cfg)?;
        Ok(all.remove(0))
    }

    /// Batched form of [`Self::sequence_log_prob`].
    pub fn sequence_log_probs(&self, problem: &IsingProblem<T>, seqs: &[Vec<usize>], cfg: &SamplingConfig) -> Result<Vec<T>> {
        let memory = self.encode(problem)?;
        let mut tape = Tape::new(&self.params);
        let m = tape.input(memory);
        let lp = self.sequence_log_probs_on_tape(&mut tape, m, problem.n(), seqs, cfg)?;
        Ok(tape.value(lp).column(0).to_vec())
    }
}
