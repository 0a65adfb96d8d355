//! Metropolis simulated annealing with single-spin flips.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GqcoError, Result};
use crate::ising::{BitString, IsingProblem};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaConfig {
    pub sweeps: usize,
    /// `None` starts at twice the largest coefficient magnitude.
    pub t_start: Option<f64>,
    pub t_end: f64,
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self { sweeps: 1000, t_start: None, t_end: 0.01, seed: 0 }
    }
}

impl SaConfig {
    pub fn with_sweeps(sweeps: usize, seed: u64) -> Self {
        Self { sweeps, seed, ..Self::default() }
    }

    /// Resolved `(T_start, T_end)`; an all-zero problem anneals at the constant `T_end`.
    pub fn temperatures<T: Real>(&self, p: &IsingProblem<T>) -> Result<(f64, f64)> {
        if self.sweeps == 0 {
            return Err(GqcoError::config("annealing needs at least one sweep"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(GqcoError::config("T_end must be positive"));
        }
        let t_start = self.t_start.unwrap_or_else(|| (2.0 * p.max_abs_coefficient().as_f64()).max(self.t_end));
        if !(t_start >= self.t_end && t_start.is_finite()) {
            return Err(GqcoError::config(format!("T_start {t_start} is below T_end {}", self.t_end)));
        }
        Ok((t_start, self.t_end))
    }
}

/// Result of one annealing run.
#[derive(Clone, Debug, PartialEq)]
pub struct SaRun {
    pub best: BitString,
    pub best_energy: f64,
    /// Best-seen energy after each sweep.
    pub trace: Vec<f64>,
}

/// Returns the best assignment seen.
pub fn simulated_annealing<T: Real>(p: &IsingProblem<T>, cfg: &SaConfig) -> Result<BitString> {
    Ok(anneal(p, cfg, false)?.best)
}

/// Like [`simulated_annealing`] but keeps the per-sweep best-energy trace.
pub fn simulated_annealing_trace<T: Real>(p: &IsingProblem<T>, cfg: &SaConfig) -> Result<SaRun> {
    anneal(p, cfg, true)
}

fn anneal<T: Real>(p: &IsingProblem<T>, cfg: &SaConfig, keep_trace: bool) -> Result<SaRun> {
    let (t0, t1) = cfg.temperatures(p)?;
    let n = p.n();
    let j: Vec<Vec<f64>> = p.coupling_matrix().into_iter().map(|r| r.into_iter().map(Real::as_f64).collect()).collect();
    let h: Vec<f64> = p.h().iter().map(|x| x.as_f64()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut s: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { -1.0 } else { 1.0 }).collect();
    // local[i] = h_i + sum_j J_ij s_j
    let mut local: Vec<f64> = (0..n).map(|i| h[i] + (0..n).map(|k| j[i][k] * s[k]).sum::<f64>()).collect();
    let mut e: f64 = (0..n).map(|i| s[i] * (h[i] + 0.5 * (local[i] - h[i]))).sum();
    let mut best = s.clone();
    let mut best_e = e;
    let mut trace = Vec::with_capacity(if keep_trace { cfg.sweeps } else { 0 });
    let ratio = if cfg.sweeps > 1 { (t1 / t0).powf(1.0 / (cfg.sweeps - 1) as f64) } else { 1.0 };
    let mut t = t0;
    for _ in 0..cfg.sweeps {
        for i in 0..n {
            let de = -2.0 * s[i] * local[i];
            if de <= 0.0 || rng.random::<f64>() < (-de / t).exp() {
                s[i] = -s[i];
                e += de;
                for (k, l) in local.iter_mut().enumerate() {
                    *l += 2.0 * j[k][i] * s[i];
                }
                if e < best_e {
                    best_e = e;
                    best.copy_from_slice(&s);
                }
            }
        }
        if keep_trace {
            trace.push(best_e);
        }
        t *= ratio;
    }
    let bits: Vec<bool> = best.iter().map(|&x| x < 0.0).collect();
    let best = BitString::from_bits(&bits);
    // recompute exactly rather than report the running sum
    let best_energy = crate::ising::bits_energy(p, &best)?.as_f64();
    Ok(SaRun { best, best_energy, trace })
}
