use ndarray::{Array3, Axis};
use rayon::prelude::*;

use super::joseph::trace;
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::sinogram::Sinogram;
use crate::volume::{Volume, VolumeGrid};

/// Evaluates `ray(src, dst, out)` for every detector sample, in parallel
/// over views, writing `n` values per ray into `n` separate arrays.
pub(crate) fn for_each_ray_multi<F>(geometry: &ScanGeometry, n: usize, ray: F) -> Vec<Array3<f64>>
where
    F: Fn([f64; 3], [f64; 3], &mut [f64]) + Sync,
{
    let det = geometry.detector();
    let mut packed = Array3::zeros((geometry.n_views, det.n_v * det.n_u, n));
    packed
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut view)| {
            let beta = geometry.beta(i);
            let src = geometry.source(beta);
            let mut buf = vec![0.0; n];
            for k in 0..det.n_v {
                for j in 0..det.n_u {
                    let dst = geometry.detector_point(beta, det.u(j), det.v(k));
                    ray(src, dst, &mut buf);
                    for (c, &b) in buf.iter().enumerate() {
                        view[[k * det.n_u + j, c]] = b;
                    }
                }
            }
        });
    (0..n)
        .map(|c| {
            packed
                .index_axis(Axis(2), c)
                .to_owned()
                .into_shape_with_order((geometry.n_views, det.n_v, det.n_u))
                .expect("row-major view data")
        })
        .collect()
}

/// Single-valued form of [`for_each_ray_multi`].
pub(crate) fn for_each_ray<F>(geometry: &ScanGeometry, ray: F) -> Array3<f64>
where
    F: Fn([f64; 3], [f64; 3]) -> f64 + Sync,
{
    for_each_ray_multi(geometry, 1, |src, dst, out| out[0] = ray(src, dst))
        .pop()
        .expect("one output")
}

pub(crate) fn check_volume(grid: &VolumeGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Shape("empty volume dimensions".into()));
    }
    grid.validate()
}

/// Line integrals of `volume` along every source-to-detector ray.
pub fn forward_project(volume: &Volume, geometry: &ScanGeometry) -> Result<Sinogram> {
    check_volume(&volume.grid)?;
    geometry.validate()?;
    let data = volume.data.as_standard_layout();
    let flat = data.as_slice().expect("standard layout");
    let grid = volume.grid;
    let sino = for_each_ray(geometry, |src, dst| {
        let mut acc = 0.0;
        trace(&grid, src, dst, |idx, w| acc += w * flat[idx]);
        acc
    });
    Sinogram::from_data(*geometry, geometry.detector(), sino)
}
