//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are borrowed
//! from a [`ParamStore`] rather than copied; [`Tape::backward`] returns
//! [`Gradients`] keyed by [`ParamId`].

pub mod gradcheck;
pub mod kernels;
mod params;

use std::collections::HashMap;
use std::ops::Range;

use ndarray::{Array2, Axis};

pub use params::{Gradients, ParamId, ParamStore};

use crate::scalar::Real;

/// A node on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Value<'a, T> {
    Owned(Array2<T>),
    Borrowed(&'a Array2<T>),
}

enum Op<T> {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, T),
    Gelu(Var),
    LayerNorm { x: Var, gain: Var, xhat: Array2<T>, inv_std: Vec<T> },
    LayerNormBias { inner: Var, bias: Var },
    GatherRows { src: Var, index: Vec<usize> },
    GatherCols { src: Var, index: Vec<usize> },
    Attend { q: Var, k: Var, v: Var, spans: Vec<Range<usize>>, heads: usize, probs: Vec<T> },
    PickLogSoftmax { logits: Var, targets: Vec<usize>, softmax: Array2<T> },
    SegmentSum { x: Var, segments: Vec<Range<usize>> },
    WeightedSum { x: Var, weights: Array2<T> },
}

struct Node<'a, T> {
    value: Value<'a, T>,
    op: Op<T>,
}

/// Records a forward computation for later differentiation.
pub struct Tape<'a, T: Real> {
    params: &'a ParamStore<T>,
    nodes: Vec<Node<'a, T>>,
    param_nodes: HashMap<ParamId, Var>,
}

impl<'a, T: Real> Tape<'a, T> {
    pub fn new(params: &'a ParamStore<T>) -> Self {
        Self { params, nodes: Vec::new(), param_nodes: HashMap::new() }
    }

    fn push(&mut self, value: Array2<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value: Value::Owned(value), op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<T> {
        match &self.nodes[v.0].value {
            Value::Owned(a) => a,
            Value::Borrowed(a) => a,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A constant (no gradient is reported for it).
    pub fn input(&mut self, value: Array2<T>) -> Var {
        self.push(value, Op::Input)
    }

    /// A learnable tensor; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        let store = self.params;
        self.nodes.push(Node { value: Value::Borrowed(store.get(id)), op: Op::Param(id) });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a).dot(self.value(b));
        self.push(y, Op::MatMul(a, b))
    }

    /// `a * b^T`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a).dot(&self.value(b).t());
        self.push(y, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a) + self.value(b);
        self.push(y, Op::Add(a, b))
    }

    /// Broadcasts a `1 x c` row over the rows of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let y = kernels::add_row(self.value(a), self.value(row));
        self.push(y, Op::AddRow(a, row))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let y = self.value(a) * s;
        self.push(y, Op::Scale(a, s))
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let y = kernels::gelu(self.value(a));
        self.push(y, Op::Gelu(a))
    }

    /// `x W + b` with `w: in x out` and `b: 1 x out`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let xw = self.matmul(x, w);
        self.add_row(xw, b)
    }

    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: T) -> Var {
        let (y, xhat, inv_std) = kernels::layer_norm(self.value(x), self.value(gain), self.value(bias), eps);
        // the bias is split off so its gradient reuses the AddRow path
        let scaled = &y - self.value(bias);
        let inner = self.push(scaled, Op::LayerNorm { x, gain, xhat, inv_std });
        self.push(y, Op::LayerNormBias { inner, bias })
    }

    pub fn gather_rows(&mut self, src: Var, index: Vec<usize>) -> Var {
        let y = self.value(src).select(Axis(0), &index);
        self.push(y, Op::GatherRows { src, index })
    }

    pub fn gather_cols(&mut self, src: Var, index: Vec<usize>) -> Var {
        let y = self.value(src).select(Axis(1), &index);
        self.push(y, Op::GatherCols { src, index })
    }

    /// See [`kernels::attend`].
    pub fn attend(&mut self, q: Var, k: Var, v: Var, spans: Vec<Range<usize>>, heads: usize) -> Var {
        let (y, probs) = kernels::attend(self.value(q).view(), self.value(k).view(), self.value(v).view(), &spans, heads);
        self.push(y, Op::Attend { q, k, v, spans, heads, probs })
    }

    /// Per-row `log softmax(logits)[target]` with `blocked` columns excluded; returns `rows x 1`.
    pub fn pick_log_softmax(&mut self, logits: Var, targets: Vec<usize>, blocked: &[Vec<usize>]) -> Var {
        let lp = kernels::masked_log_softmax(self.value(logits), blocked);
        let picked = Array2::from_shape_fn((targets.len(), 1), |(r, _)| lp[[r, targets[r]]]);
        let softmax = lp.mapv(T::exp);
        self.push(picked, Op::PickLogSoftmax { logits, targets, softmax })
    }

    /// Sums contiguous row segments of a column vector; returns `segments x 1`.
    pub fn segment_sum(&mut self, x: Var, segments: Vec<Range<usize>>) -> Var {
        let xv = self.value(x);
        let y = Array2::from_shape_fn((segments.len(), 1), |(s, _)| segments[s].clone().map(|r| xv[[r, 0]]).sum());
        self.push(y, Op::SegmentSum { x, segments })
    }

    /// `sum(weights .* x)` as a `1 x 1` scalar.
    pub fn weighted_sum(&mut self, x: Var, weights: Array2<T>) -> Var {
        let s = (self.value(x) * &weights).sum();
        self.push(Array2::from_elem((1, 1), s), Op::WeightedSum { x, weights })
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let w = Array2::ones(self.value(x).raw_dim());
        self.weighted_sum(x, w)
    }

    /// Back-propagates `seed` (same shape as `root`) and returns parameter gradients.
    pub fn backward(&self, root: Var, seed: Array2<T>) -> Gradients<T> {
        assert_eq!(seed.dim(), self.value(root).dim(), "seed shape must match root");
        let mut grads: Vec<Option<Array2<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(seed);
        let mut out = Gradients::new(self.params.len());

        fn acc<T: Real>(grads: &mut [Option<Array2<T>>], v: Var, g: Array2<T>) {
            match &mut grads[v.0] {
                Some(a) => *a += &g,
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Param(id) => out.accumulate(*id, g),
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MatMulT(a, b) => {
                    let ga = g.dot(self.value(*b));
                    let gb = g.t().dot(self.value(*a));
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::AddRow(a, row) => {
                    acc(&mut grads, *row, kernels::column_sums(&g));
                    acc(&mut grads, *a, g);
                }
                Op::Scale(a, s) => acc(&mut grads, *a, g * *s),
                Op::Gelu(a) => {
                    let d = self.value(*a).mapv(kernels::gelu_derivative);
                    acc(&mut grads, *a, g * d);
                }
                Op::LayerNormBias { inner, bias } => {
                    acc(&mut grads, *bias, kernels::column_sums(&g));
                    acc(&mut grads, *inner, g);
                }
                Op::LayerNorm { x, gain, xhat, inv_std } => {
                    acc(&mut grads, *gain, kernels::column_sums(&(&g * xhat)));
                    let dxhat = &g * self.value(*gain);
                    let c = T::lit(xhat.ncols() as f64);
                    let mut dx = Array2::zeros(g.raw_dim());
                    for (r, mut out_row) in dx.rows_mut().into_iter().enumerate() {
                        let dr = dxhat.row(r);
                        let xr = xhat.row(r);
                        let s1 = dr.sum();
                        let s2 = dr.iter().zip(xr.iter()).map(|(&a, &b)| a * b).sum::<T>();
                        let k = inv_std[r] / c;
                        for ((o, &d), &xh) in out_row.iter_mut().zip(dr.iter()).zip(xr.iter()) {
                            *o = k * (c * d - s1 - xh * s2);
                        }
                    }
                    acc(&mut grads, *x, dx);
                }
                Op::GatherRows { src, index } => {
                    let mut gs = Array2::zeros(self.value(*src).raw_dim());
                    for (r, &i) in index.iter().enumerate() {
                        let mut row = gs.row_mut(i);
                        row += &g.row(r);
                    }
                    acc(&mut grads, *src, gs);
                }
                Op::GatherCols { src, index } => {
                    let mut gs = Array2::zeros(self.value(*src).raw_dim());
                    for (c, &i) in index.iter().enumerate() {
                        let mut col = gs.column_mut(i);
                        col += &g.column(c);
                    }
                    acc(&mut grads, *src, gs);
                }
                Op::Attend { q, k, v, spans, heads, probs } => {
                    let (gq, gk, gv) = self.attend_backward(&g, *q, *k, *v, spans, *heads, probs);
                    acc(&mut grads, *q, gq);
                    acc(&mut grads, *k, gk);
                    acc(&mut grads, *v, gv);
                }
                Op::PickLogSoftmax { logits, targets, softmax } => {
                    let mut gl = softmax.clone();
                    for (r, mut row) in gl.rows_mut().into_iter().enumerate() {
                        let gr = g[[r, 0]];
                        row.mapv_inplace(|p| -gr * p);
                        row[targets[r]] += gr;
                    }
                    acc(&mut grads, *logits, gl);
                }
                Op::SegmentSum { x, segments } => {
                    let mut gx = Array2::zeros(self.value(*x).raw_dim());
                    for (s, seg) in segments.iter().enumerate() {
                        for r in seg.clone() {
                            gx[[r, 0]] += g[[s, 0]];
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::WeightedSum { x, weights } => acc(&mut grads, *x, weights * g[[0, 0]]),
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn attend_backward(
        &self,
        g: &Array2<T>,
        q: Var,
        k: Var,
        v: Var,
        spans: &[Range<usize>],
        heads: usize,
        probs: &[T],
    ) -> (Array2<T>, Array2<T>, Array2<T>) {
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let d = qv.ncols();
        let dh = d / heads;
        let scale = T::one() / T::lit(dh as f64).sqrt();
        let mut gq = Array2::zeros(qv.raw_dim());
        let mut gk = Array2::zeros(kv.raw_dim());
        let mut gv = Array2::zeros(vv.raw_dim());
        let mut offset = 0;
        let mut gp = Vec::new();
        for (r, span) in spans.iter().enumerate() {
            let len = span.len();
            if len == 0 {
                continue;
            }
            for a in 0..heads {
                let cols = a * dh..(a + 1) * dh;
                let p = &probs[offset..offset + len];
                offset += len;
                gp.clear();
                for j in span.clone() {
                    let mut s = T::zero();
                    for c in cols.clone() {
                        s += g[[r, c]] * vv[[j, c]];
                    }
                    gp.push(s);
                }
                let dot: T = p.iter().zip(&gp).map(|(&pi, &gi)| pi * gi).sum();
                for (t, j) in span.clone().enumerate() {
                    let gs = p[t] * (gp[t] - dot) * scale;
                    for c in cols.clone() {
                        gv[[j, c]] += p[t] * g[[r, c]];
                        gq[[r, c]] += gs * kv[[j, c]];
                        gk[[j, c]] += gs * qv[[r, c]];
                    }
                }
            }
        }
        (gq, gk, gv)
    }
}
