//! Preference losses over one batch of sampled circuits.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{GqcoError, Result};
use crate::ising::IsingProblem;

/// Anchor term on the preferred circuit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NllVariant {
    /// `-log p(best)`.
    #[default]
    LogProb,
    /// `-p(best)`.
    RawProb,
}

/// Unnormalised log reference weight `-<H>`.
pub fn ref_logweight(expectation: f64) -> f64 {
    -expectation
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sampled circuits for one problem, ranked by expectation.
#[derive(Clone, Debug)]
pub struct PreferenceBatch<T> {
    pub problem: IsingProblem<T>,
    pub circuits: Vec<Circuit>,
    pub expectations: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub ref_logweights: Vec<f64>,
    pub w_best: usize,
}

impl<T> PreferenceBatch<T> {
    /// Builds the batch; `w_best` is the lowest expectation, ties to the lowest index.
    pub fn new(problem: IsingProblem<T>, circuits: Vec<Circuit>, expectations: Vec<f64>, log_probs: Vec<f64>) -> Result<Self> {
        if circuits.len() != expectations.len() || circuits.len() != log_probs.len() {
            return Err(GqcoError::domain("batch arrays are not aligned"));
        }
        if circuits.len() < 2 {
            return Err(GqcoError::domain("a preference batch needs at least two circuits"));
        }
        if expectations.iter().chain(&log_probs).any(|v| v.is_nan()) {
            return Err(GqcoError::domain("NaN in preference batch"));
        }
        let mut w_best = 0;
        for (k, &e) in expectations.iter().enumerate() {
            if e < expectations[w_best] {
                w_best = k;
            }
        }
        let ref_logweights = expectations.iter().map(|&e| ref_logweight(e)).collect();
        Ok(Self { problem, circuits, expectations, log_probs, ref_logweights, w_best })
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    fn margin(&self, w: usize, l: usize) -> f64 {
        (self.log_probs[w] - self.ref_logweights[w]) - (self.log_probs[l] - self.ref_logweights[l])
    }
}

/// `log(1 + exp(-beta * margin))` for the pair `w` preferred over `l`.
pub fn dpo_pair_loss<T>(batch: &PreferenceBatch<T>, w: usize, l: usize, beta: f64) -> Result<f64> {
    if w == l || w >= batch.len() || l >= batch.len() {
        return Err(GqcoError::domain(format!("invalid preference pair ({w}, {l})")));
    }
    if batch.expectations[w] > batch.expectations[l] {
        return Err(GqcoError::domain("preferred circuit has the higher expectation"));
    }
    Ok(softplus(-beta * batch.margin(w, l)))
}

/// Best-vs-others loss and its gradient with respect to every log-probability.
#[derive(Clone, Debug, PartialEq)]
pub struct CpoLoss {
    pub value: f64,
    pub pair_mean: f64,
    pub d_log_probs: Vec<f64>,
}

/// Mean pair loss of `w_best` against every other circuit plus the anchor term.
pub fn cpo_best_vs_others_loss<T>(batch: &PreferenceBatch<T>, beta: f64, variant: NllVariant) -> Result<CpoLoss> {
    let m = batch.len();
    if m < 2 {
        return Err(GqcoError::domain("best-vs-others needs M >= 2"));
    }
    let w = batch.w_best;
    let scale = 1.0 / (m - 1) as f64;
    let mut grad = vec![0.0; m];
    let mut pair_sum = 0.0;
    for l in (0..m).filter(|&l| l != w) {
        let z = beta * batch.margin(w, l);
        pair_sum += softplus(-z);
        // d softplus(-z) / dz = -sigmoid(-z)
        let s = sigmoid(-z) * beta * scale;
        grad[w] -= s;
        grad[l] += s;
    }
    let pair_mean = pair_sum * scale;
    let anchor = match variant {
        NllVariant::LogProb => {
            grad[w] -= 1.0;
            -batch.log_probs[w]
        }
        NllVariant::RawProb => {
            let p = batch.log_probs[w].exp();
            grad[w] -= p;
            -p
        }
    };
    Ok(CpoLoss { value: pair_mean + anchor, pair_mean, d_log_probs: grad })
}
