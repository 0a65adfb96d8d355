//! Derivative-free Nelder–Mead simplex minimisation.

/// Simplex settings; coefficients are the standard reflection / expansion / contraction / shrink set.
#[derive(Clone, Debug, PartialEq)]
pub struct NelderMead {
    pub max_evals: usize,
    pub initial_step: f64,
    /// Stops once the spread of simplex values falls below this.
    pub f_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evals: 400, initial_step: 0.5, f_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

impl NelderMead {
    /// Minimises `f` from `x0`; the returned value is never worse than `f(x0)`.
    ///
    /// Uses at most `max(max_evals, d + 1)` evaluations.
    pub fn minimize(&self, x0: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Minimum {
        let d = x0.len();
        let mut evals = 0;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            f(x)
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
        simplex.push((x0.to_vec(), eval(x0, &mut evals)));
        for k in 0..d {
            let mut x = x0.to_vec();
            x[k] += self.initial_step;
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        if d == 0 {
            let (x, value) = simplex.swap_remove(0);
            return Minimum { x, value, evals };
        }
        let along = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };
        // one iteration costs at most d + 2 evaluations
        while evals + d + 2 <= self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[d].1 - simplex[0].1 <= self.f_tol {
                break;
            }
            let mut centroid = vec![0.0; d];
            for (x, _) in &simplex[..d] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / d as f64;
                }
            }
            let worst = simplex[d].0.clone();
            let xr = along(&centroid, &worst, -1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(&centroid, &worst, -2.0);
                let fe = eval(&xe, &mut evals);
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[d].1 {
                    let xc = along(&centroid, &worst, -0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(&centroid, &worst, 0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < simplex[d].1.min(fr) {
                    simplex[d] = (xc, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        let x = along(&best, &entry.0, 0.5);
                        let v = eval(&x, &mut evals);
                        *entry = (x, v);
                    }
                }
            }
        }
        let (x, value) = simplex.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty simplex");
        Minimum { x, value, evals }
    }
}
