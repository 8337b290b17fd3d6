//! The four-parameter sinogram corrector.

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sinogram::Sinogram;

/// Largest `λ0·|t − Λ|` accepted before `cosh` is considered overflowed.
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectorParams {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Threshold Λ below which values pass through unchanged.
    pub threshold: f64,
}

impl CorrectorParams {
    /// Start point of the fit: `λ0 = 1/Λ`, no polynomial terms.
    pub fn initial(threshold: f64) -> Self {
        CorrectorParams {
            lambda0: 1.0 / threshold,
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if ![self.lambda1, self.lambda2, self.lambda3]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput(
                "polynomial coefficients must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Corrected value of a single sample.
    pub fn apply(&self, p: f64) -> Result<f64> {
        if p <= self.threshold {
            return Ok(p);
        }
        let d = p - self.threshold;
        let h = h_eval(p, self.lambda0, self.threshold)?;
        Ok(h + d * (self.lambda1 + d * (self.lambda2 + d * self.lambda3)))
    }

    /// Slope of the corrector at `p`.
    pub fn slope(&self, p: f64) -> Result<f64> {
        if p <= self.threshold {
            return Ok(1.0);
        }
        let d = p - self.threshold;
        Ok(h_slope(p, self.lambda0, self.threshold)?
            + self.lambda1
            + d * (2.0 * self.lambda2 + 3.0 * d * self.lambda3))
    }

    /// Smallest slope over `(Λ, p_max]` on a uniform grid of `n` points;
    /// positive means strictly increasing there.
    pub fn min_slope(&self, p_max: f64, n: usize) -> Result<f64> {
        if p_max <= self.threshold {
            return Ok(1.0);
        }
        let span = p_max - self.threshold;
        (1..=n.max(1)).try_fold(f64::INFINITY, |acc, i| {
            let p = self.threshold + span * i as f64 / n.max(1) as f64;
            Ok(acc.min(self.slope(p)?))
        })
    }

    /// Smallest and largest `f_cor(p)/p` over `(Λ, p_max]`.
    pub fn gain_range(&self, p_max: f64, n: usize) -> Result<(f64, f64)> {
        if p_max <= self.threshold {
            return Ok((1.0, 1.0));
        }
        let span = p_max - self.threshold;
        (1..=n.max(1)).try_fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let p = self.threshold + span * i as f64 / n.max(1) as f64;
            let g = self.apply(p)? / p;
            Ok((lo.min(g), hi.max(g)))
        })
    }

    pub fn is_monotone(&self, p_max: f64) -> Result<bool> {
        Ok(self.min_slope(p_max, 512)? > 0.0)
    }
}

fn exponent(t: f64, lambda0: f64, threshold: f64) -> Result<f64> {
    if !(lambda0 > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(
            "h needs lambda0 > 0 and finite t".into(),
        ));
    }
    let a = lambda0 * (t - threshold);
    if a.abs() > MAX_EXPONENT {
        return Err(Error::Numerical(format!(
            "corrector exponent {a:.1} overflows; lambda0 = {lambda0} is mis-scaled"
        )));
    }
    Ok(a)
}

/// `h(t) = (λ0Λ−1)/(2λ0)·e^{−λ0(t−Λ)} + (λ0Λ+1)/(2λ0)·e^{λ0(t−Λ)}`,
/// evaluated as `Λ·cosh(a) + sinh(a)/λ0` with `a = λ0(t−Λ)`.
pub fn h_eval(t: f64, lambda0: f64, threshold: f64) -> Result<f64> {
    let a = exponent(t, lambda0, threshold)?;
    Ok(threshold * a.cosh() + a.sinh() / lambda0)
}

/// `dh/dt = λ0Λ·sinh(a) + cosh(a)`.
pub fn h_slope(t: f64, lambda0: f64, threshold: f64) -> Result<f64> {
    let a = exponent(t, lambda0, threshold)?;
    Ok(lambda0 * threshold * a.sinh() + a.cosh())
}

/// Applies the corrector to every sample of a sinogram.
pub fn corrector_apply(sino: &Sinogram, params: &CorrectorParams) -> Result<Sinogram> {
    params.validate()?;
    let mut out = sino.clone();
    let mut failure = None;
    Zip::from(&mut out.data).for_each(|v| {
        if failure.is_some() {
            return;
        }
        match params.apply(*v) {
            Ok(x) if x.is_finite() => *v = x,
            Ok(x) => failure = Some(Error::Numerical(format!("corrector produced {x}"))),
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
