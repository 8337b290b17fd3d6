//! Photon-counting noise: Poisson quanta plus Gaussian electronic noise.

use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sinogram::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Incident photons per detector cell.
    pub i0: f64,
    /// Electronic noise standard deviation, in counts.
    #[serde(default)]
    pub sigma: f64,
}

impl NoiseConfig {
    pub fn low() -> Self {
        NoiseConfig {
            i0: 2.0e5,
            sigma: 5.0,
        }
    }

    /// A quarter of the low-noise tube current.
    pub fn high() -> Self {
        NoiseConfig {
            i0: 5.0e4,
            sigma: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i0 > 0.0 && self.i0.is_finite()) {
            return Err(Error::Config("noise i0 must be positive".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config("noise sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Re-samples every measured column as `N = Poisson(I₀·e^{−p}) + N(0, σ²)`,
/// clamped at one count, and returns `−ln(N/I₀)`.
///
/// Each view draws from its own ChaCha stream keyed by `(seed, view)`, so
/// the result does not depend on the thread count.
pub fn add_noise(sino: &Sinogram, cfg: &NoiseConfig, seed: u64) -> Result<Sinogram> {
    cfg.validate()?;
    sino.check_finite()?;
    let electronic =
        Normal::new(0.0, cfg.sigma).map_err(|e| Error::Config(format!("electronic noise: {e}")))?;
    let mut out = sino.clone();
    let measured = &sino.measured;
    out.data
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(view, mut block)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(view as u64);
            for mut row in block.axis_iter_mut(Axis(0)) {
                for (j, p) in row.iter_mut().enumerate() {
                    if !measured[j] {
                        continue;
                    }
                    let mean = cfg.i0 * (-*p).exp();
                    let quanta = match Poisson::new(mean) {
                        Ok(d) => d.sample(&mut rng),
                        Err(_) => 0.0,
                    };
                    let count = (quanta + electronic.sample(&mut rng)).max(1.0);
                    *p = -(count / cfg.i0).ln();
                }
            }
        });
    out.noisy = true;
    Ok(out)
}
