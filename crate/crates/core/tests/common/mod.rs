#![allow(dead_code)]

use cbct_bhc::reflect::reflect_fill;
use cbct_bhc::simulate::analytic_reference;
use cbct_bhc::simulate::materials::BONE;
use cbct_bhc::simulate::materials::WATER;
use cbct_bhc::simulate::{
    analytic_pair, bundled, project_pair, rasterize_phantom, EnergySpectrum, MaterialTable,
    PhantomSpec, Primitive, Shape,
};
use cbct_bhc::{subsample_offset, ScanGeometry, Sinogram, Volume, VolumeGrid};

pub const DISC_CENTER: [f64; 2] = [6.0, -8.0];
pub const DISC_RADIUS: f64 = 30.0;
/// Two bone discs side by side: rays through both harden differently from
/// rays through one, so beam hardening breaks consistency.
pub const PAIR_CENTERS: [[f64; 2]; 2] = [[-18.0, -10.0], [18.0, -10.0]];
pub const PAIR_RADIUS: f64 = 18.0;

/// Desk geometry reduced to the mid-plane row.
pub fn mid_plane_geometry() -> ScanGeometry {
    ScanGeometry {
        n_v: 1,
        ..ScanGeometry::desk()
    }
}

pub fn disc(center: [f64; 2], radius: f64, material: u8) -> Primitive {
    Primitive {
        shape: Shape::Cylinder {
            center,
            semi_axes: [radius, radius],
            angle_deg: 0.0,
            z_range: [-20.0, 20.0],
        },
        material,
    }
}

pub fn disc_spec(center: [f64; 2], radius: f64, material: u8) -> PhantomSpec {
    PhantomSpec {
        name: "disc".into(),
        grid: bundled::phantom_grid(),
        support_radius: None,
        primitives: vec![disc(center, radius, material)],
    }
}

/// Mid-plane (polychromatic, monochromatic) sinograms of a phantom
/// rasterized on one slice, full detector.
pub fn rasterized_pair(mut spec: PhantomSpec, g: &ScanGeometry) -> (Sinogram, Sinogram) {
    let s = spectral();
    spec.grid.nz = 1;
    let labels = rasterize_phantom(&spec).unwrap();
    project_pair(&labels, &s.table, &s.spectrum, s.e_star, g, 20.0).unwrap()
}

pub fn disc_pair_spec() -> PhantomSpec {
    let mut spec = disc_spec(PAIR_CENTERS[0], PAIR_RADIUS, BONE);
    spec.primitives
        .push(disc(PAIR_CENTERS[1], PAIR_RADIUS, BONE));
    spec
}

/// Offset scan of `full`, short arm filled from conjugate rays.
pub fn offset_filled(full: &Sinogram, g: &ScanGeometry) -> Sinogram {
    reflect_fill(&subsample_offset(full, g).unwrap(), g).unwrap()
}

pub struct Spectral {
    pub spectrum: EnergySpectrum,
    pub table: MaterialTable,
    pub e_star: f64,
}

pub fn spectral() -> Spectral {
    let spectrum = EnergySpectrum::bundled_w90_cu05();
    let table = MaterialTable::standard(&spectrum.energies).unwrap();
    let e_star = spectrum.mean_energy();
    Spectral {
        spectrum,
        table,
        e_star,
    }
}

/// Full-detector (polychromatic, monochromatic) sinograms of the
/// off-center bone disc from exact chord lengths.
pub fn bone_disc_pair(g: &ScanGeometry) -> (Sinogram, Sinogram) {
    let s = spectral();
    let spec = disc_spec(DISC_CENTER, DISC_RADIUS, BONE);
    analytic_pair(&spec, &s.table, &s.spectrum, s.e_star, g, 20.0).unwrap()
}

/// Least-squares line through `(xs, ys)`; returns the max absolute residual.
pub fn affine_residual(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = sxy / sxx;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (y - (my + b * (x - mx))).abs())
        .fold(0.0, f64::max)
}

pub fn range(ys: &[f64]) -> f64 {
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Experiment on the bundled `phantom` writing into `dir`.
pub fn experiment(
    dir: &std::path::Path,
    phantom: &str,
    noise: cbct_bhc::pipeline::NoiseSetting,
    n_v: usize,
) -> cbct_bhc::pipeline::Resolved {
    use cbct_bhc::pipeline::{ExperimentConfig, Source};
    let mut cfg = ExperimentConfig::new(phantom);
    cfg.phantom = Source::Named(phantom.into());
    cfg.geometry = Source::Inline(ScanGeometry {
        n_v,
        ..ScanGeometry::desk()
    });
    cfg.noise = noise;
    cfg.seed = 1;
    cfg.output_dir = Some(dir.to_path_buf());
    cfg.resolve(std::path::Path::new(".")).unwrap()
}

/// Distance from `c` to the ray `(β, u)` of the mid-plane.
pub fn ray_distance(g: &ScanGeometry, beta: f64, u: f64, c: [f64; 2]) -> f64 {
    let src = g.source(beta);
    let dst = g.detector_point(beta, u, 0.0);
    let (dx, dy) = (dst[0] - src[0], dst[1] - src[1]);
    ((c[0] - src[0]) * dy - (c[1] - src[1]) * dx).abs() / dx.hypot(dy)
}

/// Largest error on the filled short arm `[−ℓ, −ε]`, relative to the
/// largest line integral of the full sinogram.
///
/// Rays within one detector sample of tangency are skipped: there the
/// chord has an infinite slope and any interpolation between 1° views
/// errs by a sampling-limited amount unrelated to the conjugate mapping.
pub fn short_arm_error(g: &ScanGeometry, center: [f64; 2], radius: f64) -> f64 {
    let s = spectral();
    let spec = disc_spec(center, radius, WATER);
    let full = analytic_reference(&spec, &s.table, s.e_star, g).unwrap();
    let filled = reflect_fill(&subsample_offset(&full, g).unwrap(), g).unwrap();
    let k = full.grid.center_row().unwrap();
    let peak = full.data.iter().copied().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..g.n_views {
        for j in 0..full.grid.n_u {
            let u = full.grid.u(j);
            if u < -g.ell || u > -g.eps {
                continue;
            }
            if (ray_distance(g, g.beta(i), u, center) - radius).abs() < full.grid.du {
                continue;
            }
            worst = worst.max((filled.data[[i, k, j]] - full.data[[i, k, j]]).abs());
        }
    }
    worst / peak
}

/// Ball with a raised-cosine profile: 1 at the center, 0 from `radius` out.
pub fn smooth_ball(grid: VolumeGrid, center: [f64; 3], radius: f64) -> Volume {
    Volume::from_fn(grid, |x, y, z| {
        let r =
            ((x - center[0]).powi(2) + (y - center[1]).powi(2) + (z - center[2]).powi(2)).sqrt();
        if r < radius {
            0.5 * (1.0 + (std::f64::consts::PI * r / radius).cos())
        } else {
            0.0
        }
    })
}

/// Center-to-edge difference inside `radius`, relative to the true value.
pub fn cupping(volume: &Volume, radius: f64, truth: f64) -> f64 {
    let grid = volume.grid;
    let slice = volume.slice_z(0);
    let (mut center, mut edge) = ((0.0, 0), (0.0, 0));
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let r = grid.x(i).hypot(grid.y(j));
            let acc = if r < 0.2 * radius {
                &mut center
            } else if r > 0.85 * radius && r < radius {
                &mut edge
            } else {
                continue;
            };
            acc.0 += slice[[j, i]];
            acc.1 += 1;
        }
    }
    (edge.0 / edge.1 as f64 - center.0 / center.1 as f64).abs() / truth
}
