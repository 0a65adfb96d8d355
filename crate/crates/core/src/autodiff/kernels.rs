//! Forward kernels shared by the tape and by the incremental decoder.

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::scalar::Real;

/// Row-wise layer normalisation with affine `gain`/`bias` rows (biased variance).
///
/// Returns the output together with the normalised input and per-row `1/std`.
pub fn layer_norm<T: Real>(x: &Array2<T>, gain: &Array2<T>, bias: &Array2<T>, eps: T) -> (Array2<T>, Array2<T>, Vec<T>) {
    let cols = T::lit(x.ncols() as f64);
    let mut xhat = x.clone();
    let mut inv_std = Vec::with_capacity(x.nrows());
    for mut row in xhat.rows_mut() {
        let mean = row.iter().copied().sum::<T>() / cols;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|&v| v * v).sum::<T>() / cols;
        let r = T::one() / (var + eps).sqrt();
        row.mapv_inplace(|v| v * r);
        inv_std.push(r);
    }
    let y = &xhat * gain + bias;
    (y, xhat, inv_std)
}

#[inline]
pub fn gelu_scalar<T: Real>(x: T) -> T {
    T::lit(0.5) * x * (T::one() + (x * T::FRAC_1_SQRT_2()).erf())
}

/// `d/dx` of the exact (erf) GELU.
#[inline]
pub fn gelu_derivative<T: Real>(x: T) -> T {
    let cdf = T::lit(0.5) * (T::one() + (x * T::FRAC_1_SQRT_2()).erf());
    let pdf = (-T::lit(0.5) * x * x).exp() / (T::lit(2.0) * T::PI()).sqrt();
    cdf + x * pdf
}

pub fn gelu<T: Real>(x: &Array2<T>) -> Array2<T> {
    x.mapv(gelu_scalar)
}

/// Adds a `1 x c` row to every row of `x`.
pub fn add_row<T: Real>(x: &Array2<T>, row: &Array2<T>) -> Array2<T> {
    x + row
}

/// Dense layer `x W + b`.
pub fn linear<T: Real>(x: &Array2<T>, w: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    let mut y = x.dot(w);
    y += b;
    y
}

/// Multi-head scaled dot-product attention where query row `r` attends to key rows `spans[r]`.
///
/// `d` is split into `heads` contiguous column blocks, each scaled by `1/sqrt(d/heads)`.
/// An empty span yields a zero output row. The softmax weights are returned flattened
/// as `[row][head][key]` for the backward pass.
pub fn attend<T: Real>(
    q: ArrayView2<T>,
    k: ArrayView2<T>,
    v: ArrayView2<T>,
    spans: &[Range<usize>],
    heads: usize,
) -> (Array2<T>, Vec<T>) {
    let (rows, d) = q.dim();
    assert_eq!(spans.len(), rows, "one span per query row");
    assert_eq!(d % heads, 0, "model width must divide into heads");
    let dh = d / heads;
    let scale = T::one() / T::lit(dh as f64).sqrt();
    let mut out = Array2::zeros((rows, v.ncols()));
    let total: usize = spans.iter().map(|s| s.len()).sum::<usize>() * heads;
    let mut probs = Vec::with_capacity(total);
    let mut scores = Vec::new();
    for (r, span) in spans.iter().enumerate() {
        if span.is_empty() {
            continue;
        }
        let qr = q.row(r);
        for a in 0..heads {
            let cols = a * dh..(a + 1) * dh;
            scores.clear();
            let mut max = T::neg_infinity();
            for j in span.clone() {
                let kr = k.row(j);
                let mut s = T::zero();
                for c in cols.clone() {
                    s += qr[c] * kr[c];
                }
                s *= scale;
                max = max.max(s);
                scores.push(s);
            }
            let mut z = T::zero();
            for s in scores.iter_mut() {
                *s = (*s - max).exp();
                z += *s;
            }
            for s in scores.iter_mut() {
                *s /= z;
            }
            let mut orow = out.row_mut(r);
            for (&p, j) in scores.iter().zip(span.clone()) {
                let vr = v.row(j);
                for c in cols.clone() {
                    orow[c] += p * vr[c];
                }
            }
            probs.extend_from_slice(&scores);
        }
    }
    (out, probs)
}

/// Row-wise log-softmax with some columns forced to `-inf`.
pub fn masked_log_softmax<T: Real>(logits: &Array2<T>, blocked: &[Vec<usize>]) -> Array2<T> {
    let mut out = logits.clone();
    for (r, mut row) in out.rows_mut().into_iter().enumerate() {
        if let Some(cols) = blocked.get(r) {
            for &c in cols {
                row[c] = T::neg_infinity();
            }
        }
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// Column sums as a `1 x c` row.
pub fn column_sums<T: Real>(x: &Array2<T>) -> Array2<T> {
    let s: Array1<T> = x.sum_axis(Axis(0));
    s.insert_axis(Axis(0))
}
