//! Sinogram container and the offset-detector subsampling operator.

use ndarray::{Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::geometry::{DetectorGrid, ScanGeometry};

/// Log-attenuation data over `(view, v, u)`.
///
/// Storage is row-major with `u` fastest so detector rows are contiguous;
/// [`Sinogram::get`] takes indices in `(β, u, v)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub geometry: ScanGeometry,
    pub grid: DetectorGrid,
    pub data: Array3<f64>,
    /// Per-u flag: true where the column carries measured (or filled) data.
    pub measured: Vec<bool>,
    /// Set once noise has been injected; negative values are allowed then.
    pub noisy: bool,
    /// Rays clamped at the maximum log-attenuation during simulation.
    pub clamped_rays: usize,
}

impl Sinogram {
    pub fn zeros(geometry: ScanGeometry) -> Self {
        let grid = geometry.detector();
        Sinogram {
            data: Array3::zeros((geometry.n_views, grid.n_v, grid.n_u)),
            measured: vec![true; grid.n_u],
            geometry,
            grid,
            noisy: false,
            clamped_rays: 0,
        }
    }

    pub fn from_data(
        geometry: ScanGeometry,
        grid: DetectorGrid,
        data: Array3<f64>,
    ) -> Result<Self> {
        if data.dim() != (geometry.n_views, grid.n_v, grid.n_u) {
            return Err(Error::Shape(format!(
                "sinogram data {:?} does not match ({}, {}, {})",
                data.dim(),
                geometry.n_views,
                grid.n_v,
                grid.n_u
            )));
        }
        Ok(Sinogram {
            measured: vec![true; grid.n_u],
            geometry,
            grid,
            data,
            noisy: false,
            clamped_rays: 0,
        })
    }

    /// Builds a sinogram on the geometry's detector by evaluating `f(β, u, v)`.
    pub fn from_fn(geometry: ScanGeometry, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let grid = geometry.detector();
        let data = Array3::from_shape_fn((geometry.n_views, grid.n_v, grid.n_u), |(i, k, j)| {
            f(geometry.beta(i), grid.u(j), grid.v(k))
        });
        Sinogram {
            measured: vec![true; grid.n_u],
            geometry,
            grid,
            data,
            noisy: false,
            clamped_rays: 0,
        }
    }

    pub fn n_views(&self) -> usize {
        self.data.dim().0
    }

    pub fn get(&self, view: usize, u: usize, v: usize) -> f64 {
        self.data[[view, v, u]]
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sinogram has non-finite values".into()));
        }
        Ok(())
    }

    /// Indices of the contiguous measured block, if the mask is contiguous.
    pub fn measured_range(&self) -> Option<(usize, usize)> {
        let first = self.measured.iter().position(|&m| m)?;
        let last = self.measured.iter().rposition(|&m| m)?;
        self.measured[first..=last]
            .iter()
            .all(|&m| m)
            .then_some((first, last))
    }

    /// The `(view, u)` slice at detector row `k`.
    pub fn row_slice(&self, k: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(Axis(1), k)
    }

    /// Mid-plane slice `P(β, u, 0)`, interpolating between the two central
    /// rows when the detector has an even row count.
    pub fn mid_plane(&self) -> Array2<f64> {
        match self.grid.center_row() {
            Some(k) => self.row_slice(k).to_owned(),
            None => {
                let k = self.grid.n_v / 2;
                (&self.row_slice(k - 1) + &self.row_slice(k)) * 0.5
            }
        }
    }

    /// Scales then adds: `a·self + b·other`, for linearity checks.
    pub fn combine(&self, a: f64, other: &Sinogram, b: f64) -> Result<Sinogram> {
        if self.data.dim() != other.data.dim() {
            return Err(Error::Shape("sinogram shapes differ".into()));
        }
        let mut out = self.clone();
        out.data = &self.data * a + &other.data * b;
        Ok(out)
    }
}

/// Restricts a full sinogram to the offset detector `[−ε, ℓ]`, zeroing the
/// unmeasured columns.
pub fn subsample_offset(full: &Sinogram, geometry: &ScanGeometry) -> Result<Sinogram> {
    if full.grid != geometry.detector() || full.n_views() != geometry.n_views {
        return Err(Error::Geometry(
            "full sinogram is not sampled on the requested geometry".into(),
        ));
    }
    let mut out = full.clone();
    out.geometry = *geometry;
    for j in 0..full.grid.n_u {
        let keep = full.measured[j] && geometry.is_measured(full.grid.u(j));
        out.measured[j] = keep;
        if !keep {
            out.data.slice_mut(ndarray::s![.., .., j]).fill(0.0);
        }
    }
    Ok(out)
}
