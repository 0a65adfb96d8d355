//! Adam with per-tensor step counts.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Gradients, ParamStore};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, beta1: 0.9, beta2: 0.95, eps: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub config: AdamConfig,
    pub(crate) m: Vec<Option<Array2<T>>>,
    pub(crate) v: Vec<Option<Array2<T>>>,
    pub(crate) steps: Vec<u64>,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, m: Vec::new(), v: Vec::new(), steps: Vec::new() }
    }

    fn ensure(&mut self, len: usize) {
        if self.m.len() < len {
            self.m.resize(len, None);
            self.v.resize(len, None);
            self.steps.resize(len, 0);
        }
    }

    /// Updates every parameter that received a gradient; others are left bitwise untouched.
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &Gradients<T>) {
        self.ensure(params.len());
        let c = &self.config;
        let (lr, b1, b2, eps) = (T::lit(c.learning_rate), T::lit(c.beta1), T::lit(c.beta2), T::lit(c.eps));
        let ids: Vec<_> = grads.touched().collect();
        for id in ids {
            let g = grads.get(id).expect("touched");
            let i = id.index();
            self.steps[i] += 1;
            let t = self.steps[i] as i32;
            let m = self.m[i].get_or_insert_with(|| Array2::zeros(g.raw_dim()));
            let v = self.v[i].get_or_insert_with(|| Array2::zeros(g.raw_dim()));
            let bc1 = T::one() - b1.powi(t);
            let bc2 = T::one() - b2.powi(t);
            Zip::from(params.get_mut(id)).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p -= lr * mhat / (vhat.sqrt() + eps);
            });
        }
    }

    /// Moment tensors and step counts in parameter order, for persistence.
    pub fn state(&self) -> (&[Option<Array2<T>>], &[Option<Array2<T>>], &[u64]) {
        (&self.m, &self.v, &self.steps)
    }

    pub fn from_state(config: AdamConfig, m: Vec<Option<Array2<T>>>, v: Vec<Option<Array2<T>>>, steps: Vec<u64>) -> Self {
        Self { config, m, v, steps }
    }
}
