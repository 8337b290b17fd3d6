//! Lateral extension of truncated projections.

use ndarray::{s, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DetectorGrid;
use crate::sinogram::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtrapolationMethod {
    /// Point-mirror the row about its boundary sample, then apply a
    /// raised-cosine taper.
    #[default]
    SymmetricMirrorCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationSpec {
    /// Taper width in detector samples; `None` means a quarter of the row.
    #[serde(default)]
    pub taper_width: Option<usize>,
    #[serde(default)]
    pub method: ExtrapolationMethod,
}

impl Default for ExtrapolationSpec {
    fn default() -> Self {
        ExtrapolationSpec {
            taper_width: None,
            method: ExtrapolationMethod::SymmetricMirrorCosine,
        }
    }
}

impl ExtrapolationSpec {
    pub fn width_for(&self, n_u: usize) -> usize {
        self.taper_width.unwrap_or(n_u / 4).max(1)
    }
}

/// Taper factor `k` samples beyond the edge, for `k` in `1..=width`.
fn taper(k: usize, width: usize) -> f64 {
    0.5 * (1.0 + (std::f64::consts::PI * k as f64 / width as f64).cos())
}

/// Pads every detector row beyond the measured block with its point mirror
/// about the boundary sample, `2 p(edge) − p(edge − k)`, clipped at zero and
/// tapered to reach zero `width` samples out. Value and slope stay
/// continuous across the edge.
///
/// The output grid is symmetric and just wide enough to hold the measured
/// block plus the taper on the wider side; measured samples are unchanged.
pub fn extrapolate_truncation(sino: &Sinogram, spec: &ExtrapolationSpec) -> Result<Sinogram> {
    if let Some(0) = spec.taper_width {
        return Err(Error::InvalidInput("taper width must be at least 1".into()));
    }
    let (first, last) = sino
        .measured_range()
        .ok_or_else(|| Error::InvalidInput("sinogram has no contiguous measured block".into()))?;
    let g = sino.grid;
    let width = spec.width_for(g.n_u);
    // half-width in samples of the symmetric output grid
    let half_lo = g.n_u / 2 - first.min(g.n_u / 2);
    let half_hi = last + 1 - g.n_u / 2;
    let half = if g.n_u.is_multiple_of(2) {
        half_lo.max(half_hi) + width
    } else {
        return Err(Error::InvalidInput(
            "extrapolation needs an even detector row count".into(),
        ));
    };
    let n_new = 2 * half;
    let offset = half as isize - (g.n_u / 2) as isize; // new index = old index + offset
    let new_first = (first as isize + offset) as usize;
    let new_last = (last as isize + offset) as usize;

    let (nb, nv, _) = sino.data.dim();
    let mut data = Array3::zeros((nb, nv, n_new));
    data.slice_mut(s![.., .., new_first..=new_last])
        .assign(&sino.data.slice(s![.., .., first..=last]));
    for b in 0..nb {
        for k in 0..nv {
            let left = sino.data[[b, k, first]];
            let right = sino.data[[b, k, last]];
            let span = last - first;
            for step in 1..=width {
                let t = taper(step, width);
                let m = step.min(span);
                if new_first >= step {
                    let mirrored = 2.0 * left - sino.data[[b, k, first + m]];
                    data[[b, k, new_first - step]] = mirrored.max(0.0) * t;
                }
                if new_last + step < n_new {
                    let mirrored = 2.0 * right - sino.data[[b, k, last - m]];
                    data[[b, k, new_last + step]] = mirrored.max(0.0) * t;
                }
            }
        }
    }
    let grid = DetectorGrid { n_u: n_new, ..g };
    let mut out = Sinogram::from_data(sino.geometry, grid, data)?;
    out.noisy = sino.noisy;
    out.clamped_rays = sino.clamped_rays;
    Ok(out)
}
