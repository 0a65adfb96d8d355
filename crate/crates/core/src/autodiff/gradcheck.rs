//! Central finite-difference checks for tape gradients.

use super::{Gradients, ParamId, ParamStore, Tape, Var};

/// Largest relative error between analytic and numeric gradients over every entry of `ids`.
///
/// `f` builds a scalar (`1 x 1`) output on a fresh tape.
pub fn max_relative_error<F>(store: &ParamStore<f64>, ids: &[ParamId], h: f64, f: F) -> f64
where
    F: Fn(&mut Tape<'_, f64>) -> Var,
{
    let analytic: Gradients<f64> = {
        let mut tape = Tape::new(store);
        let out = f(&mut tape);
        tape.backward(out, ndarray::Array2::ones((1, 1)))
    };
    let eval = |s: &ParamStore<f64>| {
        let mut tape = Tape::new(s);
        let out = f(&mut tape);
        tape.value(out)[[0, 0]]
    };
    let mut work = store.clone();
    let mut worst: f64 = 0.0;
    for &id in ids {
        let shape = store.get(id).dim();
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let orig = store.get(id)[[r, c]];
                work.get_mut(id)[[r, c]] = orig + h;
                let up = eval(&work);
                work.get_mut(id)[[r, c]] = orig - h;
                let down = eval(&work);
                work.get_mut(id)[[r, c]] = orig;
                let numeric = (up - down) / (2.0 * h);
                let a = analytic.get(id).map_or(0.0, |g| g[[r, c]]);
                let err = (a - numeric).abs() / (1.0 + a.abs().max(numeric.abs()));
                worst = worst.max(err);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn dense_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = ParamStore::new();
        let x = s.add("x", rand_mat(&mut rng, 3, 4));
        let w = s.add("w", rand_mat(&mut rng, 4, 5));
        let b = s.add("b", rand_mat(&mut rng, 1, 5));
        let u = s.add("u", rand_mat(&mut rng, 2, 5));
        let g = s.add("g", rand_mat(&mut rng, 1, 5));
        let lb = s.add("lb", rand_mat(&mut rng, 1, 5));
        let wts = rand_mat(&mut rng, 3, 2);
        let err = max_relative_error(&s, &[x, w, b, u, g, lb], 1e-6, |t| {
            let (x, w, b, u, g, lb) = (t.param(x), t.param(w), t.param(b), t.param(u), t.param(g), t.param(lb));
            let y = t.linear(x, w, b);
            let y = t.gelu(y);
            let y = t.layer_norm(y, g, lb, 1e-5);
            let z = t.matmul_t(y, u);
            let z2 = t.scale(z, 0.7);
            let z = t.add(z, z2);
            t.weighted_sum(z, wts.clone())
        });
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn attention_gather_and_log_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = ParamStore::new();
        let q = s.add("q", rand_mat(&mut rng, 3, 4));
        let k = s.add("k", rand_mat(&mut rng, 4, 4));
        let v = s.add("v", rand_mat(&mut rng, 4, 4));
        let o = s.add("o", rand_mat(&mut rng, 4, 6));
        let err = max_relative_error(&s, &[q, k, v, o], 1e-6, |t| {
            let (q, k, v, o) = (t.param(q), t.param(k), t.param(v), t.param(o));
            let kk = t.gather_rows(k, vec![0, 2, 2, 3]);
            let a = t.attend(q, kk, v, vec![0..2, 1..1, 1..4], 2);
            let logits = t.matmul(a, o);
            let logits = t.gather_cols(logits, vec![0, 1, 3, 5]);
            let lp = t.pick_log_softmax(logits, vec![1, 0, 3], &[vec![2], vec![], vec![0]]);
            let seg = t.segment_sum(lp, vec![0..2, 2..3]);
            t.weighted_sum(seg, ndarray::array![[0.3], [-1.2]])
        });
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn repeated_param_accumulates() {
        let mut s = ParamStore::new();
        let a = s.add("a", ndarray::array![[2.0]]);
        let mut t = Tape::new(&s);
        let x = t.param(a);
        let y = t.param(a);
        assert_eq!(x, y);
        let z = t.matmul(x, y);
        let g = t.backward(z, ndarray::array![[1.0]]);
        assert_eq!(g.get(a).unwrap()[[0, 0]], 4.0);
    }
}
