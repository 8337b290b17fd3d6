//! Fitting the corrector by minimizing the consistency cost.

use serde::{Deserialize, Serialize};

use super::corrector::CorrectorParams;
use super::nelder_mead::{minimize, Options};
use super::transform::{
    auto_threshold, resolve_line, ConsistencyConfig, ConsistencyLine, ConsistencyOperator, MidPlane,
};
use crate::error::{Error, Result};
use crate::sinogram::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_evals: usize,
    pub rel_tol: f64,
    /// Detector row to fit on; the mid-plane when absent.
    pub row: Option<usize>,
    /// Admissible range of `f_cor(p)/p` above the threshold.
    pub gain_bounds: Option<(f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 4,
            max_evals: 500,
            rel_tol: 1e-8,
            row: None,
            gain_bounds: Some((1.0, 1.5)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: CorrectorParams,
    pub y0: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    /// Cost of the uncorrected sinogram.
    pub initial_cost: f64,
    /// Cost at the optimizer's start point.
    pub start_cost: f64,
    pub final_cost: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub monotone: bool,
    pub max_value: f64,
}

struct Problem {
    mid: MidPlane,
    ops: Vec<ConsistencyOperator>,
    threshold: f64,
    max_value: f64,
    gain_bounds: Option<(f64, f64)>,
}

impl Problem {
    fn params(&self, theta: &[f64]) -> CorrectorParams {
        CorrectorParams {
            lambda0: theta[0].exp(),
            lambda1: theta[1],
            lambda2: theta[2],
            lambda3: theta[3],
            threshold: self.threshold,
        }
    }

    fn cost(&self, params: Option<&CorrectorParams>) -> Result<f64> {
        let data = match params {
            Some(c) => {
                let mut out = self.mid.data.clone();
                for v in out.iter_mut() {
                    *v = c.apply(*v)?;
                }
                out
            }
            None => self.mid.data.clone(),
        };
        Ok(self.ops.iter().map(|op| op.cost(data.view())).sum())
    }

    /// Cost with a penalty that keeps the corrector increasing.
    fn objective(&self, theta: &[f64], scale: f64) -> f64 {
        let params = self.params(theta);
        let slope = match params.min_slope(self.max_value, 256) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        if slope <= 0.0 {
            return scale * (2.0 - slope);
        }
        if let Some((lo, hi)) = self.gain_bounds {
            let (g_lo, g_hi) = match params.gain_range(self.max_value, 64) {
                Ok(g) => g,
                Err(_) => return f64::INFINITY,
            };
            let excess = (lo - g_lo).max(0.0) + (g_hi - hi).max(0.0);
            if excess > 0.0 {
                return scale * (1.0 + excess);
            }
        }
        self.cost(Some(&params)).unwrap_or(f64::INFINITY)
    }
}

/// Fits `(λ0, λ1, λ2, λ3)` with fixed threshold on one detector row of a
/// reflected sinogram.
///
/// Each restart is a Nelder–Mead run over `(ln λ0, λ1, λ2, λ3)` from the
/// best point so far with a differently scaled initial simplex, so the
/// result is deterministic for a given input and configuration.
pub fn fit_params(
    sino: &Sinogram,
    cfg: &ConsistencyConfig,
    opts: &FitOptions,
) -> Result<FitReport> {
    let mid = match opts.row {
        Some(k) => MidPlane::from_row(sino, k)?,
        None => MidPlane::from_sinogram(sino),
    };
    let line = resolve_line(&mid, cfg)?;
    let threshold = match cfg.threshold {
        Some(t) => t,
        None => auto_threshold(&mid, cfg.support_fraction, cfg.threshold_quantile)?,
    };
    fit_on_line(mid, &line, threshold, cfg, opts)
}

pub(crate) fn fit_on_line(
    mid: MidPlane,
    line: &ConsistencyLine,
    threshold: f64,
    cfg: &ConsistencyConfig,
    opts: &FitOptions,
) -> Result<FitReport> {
    if opts.restarts == 0 || opts.max_evals < 10 {
        return Err(Error::Config(
            "fit needs at least one restart and 10 evaluations".into(),
        ));
    }
    let ops = (0..=cfg.k_max)
        .map(|k| {
            ConsistencyOperator::new(&mid, line, k, cfg.beta_substeps)?
                .with_smoothing(cfg.smoothing_degree)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_value = mid.max_value();
    let problem = Problem {
        mid,
        ops,
        threshold,
        max_value,
        gain_bounds: opts.gain_bounds,
    };
    let initial_cost = problem.cost(None)?;
    let mut start = CorrectorParams::initial(threshold);
    start.validate()?;
    // shrink λ0 towards the identity until the start is admissible
    if let Some((lo, hi)) = problem.gain_bounds {
        for _ in 0..60 {
            let (g_lo, g_hi) = start.gain_range(max_value, 64)?;
            if g_lo >= lo && g_hi <= hi {
                break;
            }
            start.lambda0 *= 0.5;
        }
    }
    let mut theta = vec![start.lambda0.ln(), 0.0, 0.0, 0.0];
    let start_cost = problem.cost(Some(&start))?;
    // infeasible points must score worse than any feasible one seen so far
    let penalty = 10.0 * initial_cost.max(start_cost).max(f64::MIN_POSITIVE);
    let mut best = problem.objective(&theta, penalty);

    let span = (max_value - threshold).max(0.1 * threshold);
    let base = [1.0, 0.2, 0.2 / span, 0.2 / (span * span)];
    let scales = [1.0, 0.5, 2.0, 0.25];
    let mut evaluations = 1;
    let mut converged = false;
    for r in 0..opts.restarts {
        let s = scales[r % scales.len()] / (1 + r / scales.len()) as f64;
        let steps: Vec<f64> = base.iter().map(|b| b * s).collect();
        let m = minimize(
            |t| problem.objective(t, penalty),
            &theta,
            &steps,
            Options {
                max_evals: opts.max_evals,
                rel_tol: opts.rel_tol,
                abs_tol: 1e-30,
            },
        );
        evaluations += m.evaluations;
        converged |= m.converged;
        if m.value <= best {
            best = m.value;
            theta = m.x;
        }
        log::debug!(
            "restart {r}: cost {:.6e} after {} evaluations",
            m.value,
            m.evaluations
        );
    }
    let params = problem.params(&theta);
    let monotone = params.is_monotone(max_value).unwrap_or(false);
    if !converged {
        log::warn!("corrector fit did not converge within budget; keeping best point");
    }
    if !monotone {
        log::warn!("fitted corrector is not increasing over [0, {max_value:.3}]");
    }
    // the corrector may land outside the feasible set only if every point was
    // penalized; report the true cost in that case
    let final_cost = if monotone {
        best
    } else {
        problem.cost(Some(&params))?
    };
    Ok(FitReport {
        params,
        y0: line.y0,
        x_min: line.xs[0],
        x_max: *line.xs.last().expect("non-empty grid"),
        n_x: line.xs.len(),
        initial_cost,
        start_cost,
        final_cost,
        evaluations,
        restarts: opts.restarts,
        converged,
        monotone,
        max_value,
    })
}
