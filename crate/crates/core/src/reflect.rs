//! Fills the unmeasured short arm of an offset-detector sinogram from
//! conjugate rays measured on the long arm.

use ndarray::{Array3, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{blend_weight_unchecked, conjugate_angle, ScanGeometry};
use crate::sinogram::Sinogram;

/// Linear interpolation in β (with wraparound) at detector sample `(k, j)`.
fn at_beta(data: &Array3<f64>, beta: f64, dbeta: f64, k: usize, j: usize) -> f64 {
    let n = data.dim().0;
    let f = beta / dbeta;
    let i0 = f.floor();
    let w = f - i0;
    let i0 = (i0 as isize).rem_euclid(n as isize) as usize;
    let i1 = (i0 + 1) % n;
    (1.0 - w) * data[[i0, k, j]] + w * data[[i1, k, j]]
}

/// Produces a sinogram defined on `[−ℓ, ℓ]`:
/// direct samples on `[ε, ℓ]`, conjugate samples on `[−ℓ, −ε]`, and a
/// cosine blend of the two across `(−ε, ε)`.
///
/// The detector grid is unchanged; columns beyond `ℓ` stay zero and are
/// marked unmeasured.
pub fn reflect_fill(sino: &Sinogram, geometry: &ScanGeometry) -> Result<Sinogram> {
    if !(geometry.eps > 0.0) {
        return Err(Error::Geometry("short arm width must be positive".into()));
    }
    geometry.validate()?;
    if sino.n_views() != geometry.n_views || sino.grid != geometry.detector() {
        return Err(Error::Geometry(
            "sinogram does not match the scan geometry".into(),
        ));
    }
    let g = sino.grid;
    let (eps, ell) = (geometry.eps, geometry.ell);
    for j in 0..g.n_u {
        let u = g.u(j);
        if u >= -eps && u <= ell && !sino.measured[j] {
            return Err(Error::InvalidInput(format!(
                "detector sample u = {u:.3} inside the measured arm is flagged missing"
            )));
        }
    }
    sino.check_finite()?;
    let dbeta = geometry.delta_beta();
    let data = &sino.data;
    let mut out = Array3::zeros(data.dim());
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .try_for_each(|(i, mut view)| -> Result<()> {
            let beta = geometry.beta(i);
            for j in 0..g.n_u {
                let u = g.u(j);
                if u.abs() > ell {
                    continue;
                }
                let jm = g.mirror_u(j);
                debug_assert!(u >= eps || sino.measured[jm]);
                for k in 0..g.n_v {
                    let direct = data[[i, k, j]];
                    view[[k, j]] = if u >= eps {
                        direct
                    } else {
                        let conj = at_beta(data, conjugate_angle(beta, u, geometry)?, dbeta, k, jm);
                        if u <= -eps {
                            conj
                        } else {
                            let w = blend_weight_unchecked(u, eps);
                            w * conj + (1.0 - w) * direct
                        }
                    };
                }
            }
            Ok(())
        })?;
    let mut filled = Sinogram::from_data(*geometry, g, out)?;
    filled.measured = (0..g.n_u).map(|j| g.u(j).abs() <= ell).collect();
    filled.noisy = sino.noisy;
    filled.clamped_rays = sino.clamped_rays;
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinogram::subsample_offset;

    fn geometry() -> ScanGeometry {
        ScanGeometry {
            n_v: 1,
            ..ScanGeometry::desk()
        }
    }

    #[test]
    fn rotationally_symmetric_row_comes_out_symmetric() {
        let g = geometry();
        let full = Sinogram::from_fn(g, |_, u, _| (1.0 - (u / 60.0).powi(2)).max(0.0));
        let p = subsample_offset(&full, &g).unwrap();
        let f = reflect_fill(&p, &g).unwrap();
        for i in [0, 17, 200] {
            for j in 0..f.grid.n_u {
                if f.grid.u(j).abs() <= g.ell {
                    let jm = f.grid.mirror_u(j);
                    assert!((f.data[[i, 0, j]] - f.data[[i, 0, jm]]).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn long_arm_is_passed_through() {
        let g = geometry();
        let full = Sinogram::from_fn(g, |b, u, _| 1.0 + b.sin() * u / 100.0);
        let p = subsample_offset(&full, &g).unwrap();
        let f = reflect_fill(&p, &g).unwrap();
        for j in 0..f.grid.n_u {
            let u = f.grid.u(j);
            if u >= g.eps && u <= g.ell {
                assert_eq!(f.data.index_axis(Axis(2), j), p.data.index_axis(Axis(2), j));
            }
            if u.abs() > g.ell {
                assert!(!f.measured[j]);
            }
        }
    }

    #[test]
    fn missing_measured_sample_rejected() {
        let g = geometry();
        let mut p = subsample_offset(&Sinogram::zeros(g), &g).unwrap();
        let j = p.grid.n_u / 2;
        p.measured[j] = false;
        assert!(reflect_fill(&p, &g).is_err());
    }

    #[test]
    fn full_detector_is_identity_on_measured_arm() {
        let g = ScanGeometry {
            eps: 52.0,
            ..geometry()
        };
        let full = Sinogram::from_fn(g, |_, u, _| 2.0 + (u / 40.0).cos());
        let p = subsample_offset(&full, &g).unwrap();
        let f = reflect_fill(&p, &g).unwrap();
        for j in 0..f.grid.n_u {
            if f.grid.u(j).abs() <= g.ell {
                for i in 0..g.n_views {
                    assert!((f.data[[i, 0, j]] - p.data[[i, 0, j]]).abs() < 1e-12);
                }
            }
        }
    }
}
