//! Image quality against a reference: NRMSD and SSIM.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume;

/// `100·‖x − x*‖/‖x*‖` over the voxels where `mask` is set (all voxels
/// when `mask` is `None`).
pub fn nrmsd(
    image: &Volume,
    reference: &Volume,
    mask: Option<&ndarray::Array3<bool>>,
) -> Result<f64> {
    if image.data.dim() != reference.data.dim() {
        return Err(Error::Shape("image and reference differ in shape".into()));
    }
    if let Some(m) = mask {
        if m.dim() != image.data.dim() {
            return Err(Error::Shape("mask does not match the image".into()));
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    Zip::indexed(&image.data)
        .and(&reference.data)
        .for_each(|idx, &x, &r| {
            if mask.is_none_or(|m| m[idx]) {
                num += (x - r) * (x - r);
                den += r * r;
            }
        });
    if den == 0.0 {
        return Err(Error::InvalidInput(
            "reference is zero under the mask".into(),
        ));
    }
    Ok(100.0 * (num / den).sqrt())
}

/// SSIM stabilization and window settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Dynamic range `L` of the data.
    pub data_range: f64,
    pub k1: f64,
    pub k2: f64,
    pub window: usize,
    pub sigma: f64,
}

impl SsimParams {
    pub fn with_range(data_range: f64) -> Self {
        SsimParams {
            data_range,
            k1: 0.01,
            k2: 0.03,
            window: 11,
            sigma: 1.5,
        }
    }
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering: output has `n − size + 1` samples per axis.
fn filter_valid(img: &Array2<f64>, w: &[f64]) -> Array2<f64> {
    let (ny, nx) = img.dim();
    let s = w.len();
    let tmp: Array2<f64> = Array2::from_shape_fn((ny, nx - s + 1), |(y, x)| {
        (0..s).map(|k| w[k] * img[[y, x + k]]).sum::<f64>()
    });
    Array2::from_shape_fn((ny - s + 1, nx - s + 1), |(y, x)| {
        (0..s).map(|k| w[k] * tmp[[y + k, x]]).sum::<f64>()
    })
}

/// Mean local SSIM with a Gaussian window, over all fully contained
/// window positions.
pub fn ssim(
    image: ArrayView2<'_, f64>,
    reference: ArrayView2<'_, f64>,
    params: &SsimParams,
) -> Result<f64> {
    if image.dim() != reference.dim() {
        return Err(Error::Shape("SSIM inputs differ in shape".into()));
    }
    let (ny, nx) = image.dim();
    if params.window == 0 || params.window > ny || params.window > nx {
        return Err(Error::InvalidInput(format!(
            "SSIM window {} does not fit a {ny}×{nx} image",
            params.window
        )));
    }
    if !(params.data_range > 0.0) {
        return Err(Error::InvalidInput(
            "SSIM data range must be positive".into(),
        ));
    }
    let w = gaussian_window(params.window, params.sigma);
    let a = image.to_owned();
    let b = reference.to_owned();
    let mu_a = filter_valid(&a, &w);
    let mu_b = filter_valid(&b, &w);
    let aa = filter_valid(&(&a * &a), &w);
    let bb = filter_valid(&(&b * &b), &w);
    let ab = filter_valid(&(&a * &b), &w);
    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);
    let mut total = 0.0;
    Zip::from(&mu_a)
        .and(&mu_b)
        .and(&aa)
        .and(&bb)
        .and(&ab)
        .for_each(|&ma, &mb, &saa, &sbb, &sab| {
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        });
    Ok(total / mu_a.len() as f64)
}

/// SSIM per z-slice, averaged. The data range is the reference's value
/// range over the whole volume.
pub fn ssim_volume(image: &Volume, reference: &Volume) -> Result<f64> {
    if image.data.dim() != reference.data.dim() {
        return Err(Error::Shape("image and reference differ in shape".into()));
    }
    let (lo, hi) = reference
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let params = SsimParams::with_range(hi - lo);
    let values: Vec<f64> = image
        .data
        .axis_iter(Axis(0))
        .into_par_iter()
        .zip(reference.data.axis_iter(Axis(0)).into_par_iter())
        .map(|(a, b)| ssim(a, b, &params))
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Crops every slice to the bounding square of a centered disc of radius
/// `radius` mm, the region scored by the SSIM.
pub fn crop_to_radius(volume: &Volume, radius: f64) -> Volume {
    let g = volume.grid;
    let keep = |n: usize, c: &dyn Fn(usize) -> f64, o: f64| -> (usize, usize) {
        let idx: Vec<usize> = (0..n).filter(|&i| (c(i) - o).abs() <= radius).collect();
        (idx[0], *idx.last().unwrap())
    };
    let (x0, x1) = keep(g.nx, &|i| g.x(i), 0.0);
    let (y0, y1) = keep(g.ny, &|j| g.y(j), 0.0);
    let data = volume
        .data
        .slice(ndarray::s![.., y0..=y1, x0..=x1])
        .to_owned();
    let mut grid = g;
    grid.nx = x1 - x0 + 1;
    grid.ny = y1 - y0 + 1;
    grid.origin = [
        0.5 * (g.x(x0) + g.x(x1)),
        0.5 * (g.y(y0) + g.y(y1)),
        g.origin[2],
    ];
    Volume { grid, data }
}

/// NRMSD over the ROI cylinder and SSIM over the square inscribed in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiScores {
    pub nrmsd: f64,
    pub ssim: f64,
}

pub fn roi_scores(image: &Volume, reference: &Volume, roi_radius: f64) -> Result<RoiScores> {
    if image.grid != reference.grid {
        return Err(Error::Shape("image and reference grids differ".into()));
    }
    let mask = reference.grid.cylinder_mask(roi_radius);
    let square = roi_radius / std::f64::consts::SQRT_2;
    Ok(RoiScores {
        nrmsd: nrmsd(image, reference, Some(&mask))?,
        ssim: ssim_volume(
            &crop_to_radius(image, square),
            &crop_to_radius(reference, square),
        )?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::VolumeGrid;
    use ndarray::Array3;

    fn vol(f: impl Fn(usize, usize, usize) -> f64) -> Volume {
        let g = VolumeGrid::centered(12, 10, 2, 1.0);
        Volume {
            grid: g,
            data: Array3::from_shape_fn(g.shape(), |(k, j, i)| f(k, j, i)),
        }
    }

    #[test]
    fn nrmsd_examples() {
        let r = vol(|k, j, i| 1.0 + (k + j * 2 + i) as f64 * 0.1);
        assert_eq!(nrmsd(&r, &r, None).unwrap(), 0.0);
        let double = Volume {
            grid: r.grid,
            data: &r.data * 2.0,
        };
        assert!((nrmsd(&double, &r, None).unwrap() - 100.0).abs() < 1e-12);
        let c = 0.25;
        let shifted = Volume {
            grid: r.grid,
            data: &r.data + c,
        };
        let ss: f64 = r.data.iter().map(|v| v * v).sum();
        let expect = 100.0 * (r.data.len() as f64 * c * c / ss).sqrt();
        assert!((nrmsd(&shifted, &r, None).unwrap() - expect).abs() < 1e-10);
        let zero = vol(|_, _, _| 0.0);
        assert!(nrmsd(&r, &zero, None).is_err());
    }

    #[test]
    fn nrmsd_scale_invariant_and_masked() {
        let r = vol(|k, j, i| ((k + j + i) as f64).sin() + 2.0);
        let x = vol(|k, j, i| ((k * j + i) as f64).cos() + 2.0);
        let a = -3.5;
        let xa = Volume {
            grid: x.grid,
            data: &x.data * a,
        };
        let ra = Volume {
            grid: r.grid,
            data: &r.data * a,
        };
        assert!((nrmsd(&x, &r, None).unwrap() - nrmsd(&xa, &ra, None).unwrap()).abs() < 1e-10);
        let mask = Array3::from_shape_fn(r.data.dim(), |(_, j, _)| j < 3);
        let mut y = r.clone();
        y.data.slice_mut(ndarray::s![.., 5.., ..]).fill(100.0);
        assert_eq!(nrmsd(&y, &r, Some(&mask)).unwrap(), 0.0);
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = Array2::from_shape_fn((20, 24), |(y, x)| ((x * 7 + y * 3) % 11) as f64);
        let b = Array2::from_shape_fn((20, 24), |(y, x)| ((x * 5 + y * 2) % 13) as f64);
        let p = SsimParams::with_range(12.0);
        assert_eq!(ssim(a.view(), a.view(), &p).unwrap(), 1.0);
        let ab = ssim(a.view(), b.view(), &p).unwrap();
        let ba = ssim(b.view(), a.view(), &p).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab < 1.0 && ab > -1.0);
    }

    #[test]
    fn ssim_of_negation_is_minus_one() {
        // single-pixel windows reduce SSIM to the luminance term
        let a = Array2::from_shape_fn((16, 16), |(y, x)| 1.0 + (x + 2 * y) as f64);
        let neg = a.mapv(|v| -v);
        let p = SsimParams {
            window: 1,
            ..SsimParams::with_range(1e-6)
        };
        let s = ssim(a.view(), neg.view(), &p).unwrap();
        assert!((s + 1.0).abs() < 1e-6, "{s}");
    }

    #[test]
    fn checkerboard_against_scalar_formula() {
        let a = Array2::from_shape_fn((8, 8), |(y, x)| if (x + y) % 2 == 0 { 1.0 } else { 0.0 });
        let b = Array2::from_elem((8, 8), 0.5);
        let p = SsimParams {
            window: 7,
            ..SsimParams::with_range(1.0)
        };
        // independent evaluation: one scalar loop per window position
        let w = gaussian_window(7, 1.5);
        let (c1, c2) = ((0.01f64).powi(2), (0.03f64).powi(2));
        let mut total = 0.0;
        for oy in 0..2 {
            for ox in 0..2 {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for y in 0..7 {
                    for x in 0..7 {
                        let wt = w[y] * w[x];
                        let (va, vb) = (a[[oy + y, ox + x]], b[[oy + y, ox + x]]);
                        ma += wt * va;
                        mb += wt * vb;
                        saa += wt * va * va;
                        sbb += wt * vb * vb;
                        sab += wt * va * vb;
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                total += (2.0 * ma * mb + c1) * (2.0 * cov + c2)
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            }
        }
        let expect = total / 4.0;
        assert!((ssim(a.view(), b.view(), &p).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn window_larger_than_image_rejected() {
        let a = Array2::<f64>::zeros((5, 5));
        assert!(ssim(a.view(), a.view(), &SsimParams::with_range(1.0)).is_err());
    }

    #[test]
    fn crop_keeps_center() {
        let v = vol(|_, j, i| (j * 100 + i) as f64);
        let c = crop_to_radius(&v, 2.0);
        assert_eq!(c.grid.nx, 4);
        assert_eq!(c.data[[0, 0, 0]], v.data[[0, 3, 4]]);
    }
}
