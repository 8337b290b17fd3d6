//! Feldkamp cone-beam reconstruction for a full circular scan.

use ndarray::{Array2, Array3, ArrayView2, Axis};
use rayon::prelude::*;

use super::filter::{FilterSpec, RampFilter};
use crate::error::{Error, Result};
use crate::geometry::{DetectorGrid, ScanGeometry};
use crate::sinogram::Sinogram;
use crate::volume::{Volume, VolumeGrid};

/// Cosine weighting followed by row-wise ramp filtering; returns the
/// filtered `(view, v, u)` array.
pub fn filter_sinogram(sino: &Sinogram, filter: &FilterSpec) -> Result<Array3<f64>> {
    let g = &sino.grid;
    let r = sino.geometry.source_radius;
    let ramp = RampFilter::new(g.n_u, g.du, *filter)?;
    let mut out = sino.data.clone();
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .for_each_init(Vec::new, |scratch, mut view| {
            for (k, mut row) in view.axis_iter_mut(Axis(0)).enumerate() {
                let v = g.v(k);
                let row = row.as_slice_mut().expect("contiguous detector row");
                for (j, x) in row.iter_mut().enumerate() {
                    let u = g.u(j);
                    *x *= r / (r * r + u * u + v * v).sqrt();
                }
                ramp.apply(row, scratch);
            }
        });
    Ok(out)
}

fn check_scan(sino: &Sinogram) -> Result<()> {
    let geometry = &sino.geometry;
    geometry.validate()?;
    if sino.n_views() != geometry.n_views {
        return Err(Error::Shape(format!(
            "sinogram has {} views, geometry {}",
            sino.n_views(),
            geometry.n_views
        )));
    }
    Ok(())
}

/// Bilinear detector lookup with zeros outside the array.
#[inline]
fn sample(view: &ArrayView2<'_, f64>, g: &DetectorGrid, u: f64, v: f64) -> f64 {
    let fu = g.u_index(u);
    let fv = g.v_index(v);
    let u0 = fu.floor();
    let v0 = fv.floor();
    let (wu, wv) = (fu - u0, fv - v0);
    let (u0, v0) = (u0 as isize, v0 as isize);
    let mut acc = 0.0;
    for (vi, wvi) in [(v0, 1.0 - wv), (v0 + 1, wv)] {
        if vi < 0 || vi as usize >= g.n_v || wvi == 0.0 {
            continue;
        }
        for (ui, wui) in [(u0, 1.0 - wu), (u0 + 1, wu)] {
            if ui < 0 || ui as usize >= g.n_u || wui == 0.0 {
                continue;
            }
            acc += wvi * wui * view[[vi as usize, ui as usize]];
        }
    }
    acc
}

/// Weighted backprojection of a filtered sinogram onto `grid`.
pub fn backproject(
    filtered: &Array3<f64>,
    geometry: &ScanGeometry,
    detector: &DetectorGrid,
    grid: &VolumeGrid,
) -> Volume {
    let r = geometry.source_radius;
    let n_views = filtered.dim().0;
    let dbeta = std::f64::consts::TAU / n_views as f64;
    let trig: Vec<(f64, f64)> = (0..n_views).map(|i| (i as f64 * dbeta).sin_cos()).collect();
    let views: Vec<ArrayView2<'_, f64>> = filtered.axis_iter(Axis(0)).collect();

    let mut data = Array3::<f64>::zeros(grid.shape());
    data.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(k, mut slab)| {
            let z = grid.z(k);
            for j in 0..grid.ny {
                let y = grid.y(j);
                for i in 0..grid.nx {
                    let x = grid.x(i);
                    let mut acc = 0.0;
                    for (view, &(s, c)) in views.iter().zip(&trig) {
                        let depth = r + x * s - y * c;
                        let u = -r * (x * c + y * s) / depth;
                        let v = r * z / depth;
                        let w = r * r / (depth * depth);
                        acc += w * sample(view, detector, u, v);
                    }
                    slab[[j, i]] = 0.5 * dbeta * acc;
                }
            }
        });
    Volume { grid: *grid, data }
}

/// FDK reconstruction of a full-scan sinogram onto `grid`.
pub fn fdk_reconstruct(sino: &Sinogram, filter: &FilterSpec, grid: &VolumeGrid) -> Result<Volume> {
    check_scan(sino)?;
    grid.validate()?;
    sino.check_finite()?;
    let filtered = filter_sinogram(sino, filter)?;
    Ok(backproject(&filtered, &sino.geometry, &sino.grid, grid))
}

/// Two-dimensional fan-beam FBP of one `(view, u)` slice onto an
/// `nx × ny` grid in the plane `z = 0`.
pub fn fan_beam_fbp(
    slice: ArrayView2<'_, f64>,
    geometry: &ScanGeometry,
    detector: &DetectorGrid,
    filter: &FilterSpec,
    grid: &VolumeGrid,
) -> Result<Array2<f64>> {
    let (n_views, n_u) = slice.dim();
    if n_u != detector.n_u || n_views != geometry.n_views {
        return Err(Error::Shape(
            "fan-beam slice does not match its geometry".into(),
        ));
    }
    let r = geometry.source_radius;
    let ramp = RampFilter::new(n_u, detector.du, *filter)?;
    let mut filtered = slice.to_owned();
    let mut scratch = Vec::new();
    for mut row in filtered.axis_iter_mut(Axis(0)) {
        let row = row.as_slice_mut().expect("contiguous row");
        for (j, x) in row.iter_mut().enumerate() {
            let u = detector.u(j);
            *x *= r / (r * r + u * u).sqrt();
        }
        ramp.apply(row, &mut scratch);
    }
    let dbeta = std::f64::consts::TAU / n_views as f64;
    let mut out = Array2::zeros((grid.ny, grid.nx));
    for j in 0..grid.ny {
        let y = grid.y(j);
        for i in 0..grid.nx {
            let x = grid.x(i);
            let mut acc = 0.0;
            for b in 0..n_views {
                let (s, c) = (b as f64 * dbeta).sin_cos();
                let depth = r + x * s - y * c;
                let u = -r * (x * c + y * s) / depth;
                let fu = detector.u_index(u);
                let u0 = fu.floor();
                let wu = fu - u0;
                let u0 = u0 as isize;
                let mut val = 0.0;
                if u0 >= 0 && (u0 as usize) < n_u && 1.0 - wu != 0.0 {
                    val += (1.0 - wu) * filtered[[b, u0 as usize]];
                }
                if u0 + 1 >= 0 && ((u0 + 1) as usize) < n_u && wu != 0.0 {
                    val += wu * filtered[[b, (u0 + 1) as usize]];
                }
                acc += r * r / (depth * depth) * val;
            }
            out[[j, i]] = 0.5 * dbeta * acc;
        }
    }
    Ok(out)
}
