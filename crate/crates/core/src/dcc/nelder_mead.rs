//! Derivative-free simplex minimization.

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_evals: usize,
    /// Stop when the simplex values agree to this relative spread.
    pub rel_tol: f64,
    /// Absolute floor for the spread test.
    pub abs_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_evals: 500,
            rel_tol: 1e-8,
            abs_tol: 1e-300,
        }
    }
}

/// Minimizes `f` starting from the simplex `x0, x0 + steps[i]·e_i`.
/// Non-finite values are treated as `+∞`.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    opts: Options,
) -> Minimum {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let mut converged = false;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if worst.is_finite() && worst - best <= opts.rel_tol * best.abs() + opts.abs_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|p| p.0[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0.clone();
        for p in simplex.iter_mut().skip(1) {
            for (xi, bi) in p.0.iter_mut().zip(&x_best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            p.1 = eval(&p.0, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(
            rosen,
            &[-1.2, 1.0],
            &[0.5, 0.5],
            Options {
                max_evals: 5000,
                rel_tol: 0.0,
                abs_tol: 1e-20,
            },
        );
        assert!(m.converged);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            m.x
        );
    }

    #[test]
    fn quadratic_in_four_dimensions() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * (v - 0.3).powi(2))
                .sum()
        };
        let m = minimize(
            f,
            &[0.0; 4],
            &[0.1; 4],
            Options {
                max_evals: 4000,
                rel_tol: 0.0,
                abs_tol: 1e-18,
            },
        );
        assert!(m.x.iter().all(|v| (v - 0.3).abs() < 1e-4));
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let m = minimize(f, &[0.5], &[-1.0], Options::default());
        assert!((m.x[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn budget_is_respected() {
        let m = minimize(
            |x: &[f64]| x[0].sin() + x[1].cos(),
            &[0.0, 0.0],
            &[1.0, 1.0],
            Options {
                max_evals: 20,
                ..Options::default()
            },
        );
        assert!(m.evaluations <= 20 + 3);
    }
}
