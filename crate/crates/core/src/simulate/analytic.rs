//! Exact-chord sinograms of a phantom spec, independent of any voxel grid.

use crate::error::Result;
use crate::geometry::ScanGeometry;
use crate::simulate::materials::MaterialTable;
use crate::simulate::phantom::PhantomSpec;
use crate::simulate::project::{project_models, SpectralModel, DEFAULT_MAX_LOG};
use crate::simulate::spectrum::EnergySpectrum;
use crate::sinogram::Sinogram;

fn chords(spec: &PhantomSpec) -> impl Fn([f64; 3], [f64; 3]) -> [f64; 16] + Sync + '_ {
    |src, dst| spec.chord_lengths(src, [dst[0] - src[0], dst[1] - src[1], dst[2] - src[2]])
}

/// Polychromatic sinogram using exact intersection lengths.
pub fn analytic_polychromatic(
    spec: &PhantomSpec,
    table: &MaterialTable,
    spectrum: &EnergySpectrum,
    geometry: &ScanGeometry,
) -> Result<Sinogram> {
    spec.validate()?;
    let model = SpectralModel::polychromatic(table, spectrum)?;
    Ok(project_models(geometry, &[&model], DEFAULT_MAX_LOG, chords(spec))?.remove(0))
}

/// Monochromatic line integrals at `e_star` using exact intersection lengths.
pub fn analytic_reference(
    spec: &PhantomSpec,
    table: &MaterialTable,
    e_star: f64,
    geometry: &ScanGeometry,
) -> Result<Sinogram> {
    spec.validate()?;
    let model = SpectralModel::monochromatic(table, e_star)?;
    Ok(project_models(geometry, &[&model], DEFAULT_MAX_LOG, chords(spec))?.remove(0))
}

/// Both analytic sinograms from one pass.
pub fn analytic_pair(
    spec: &PhantomSpec,
    table: &MaterialTable,
    spectrum: &EnergySpectrum,
    e_star: f64,
    geometry: &ScanGeometry,
    max_log: f64,
) -> Result<(Sinogram, Sinogram)> {
    spec.validate()?;
    let poly = SpectralModel::polychromatic(table, spectrum)?;
    let mono = SpectralModel::monochromatic(table, e_star)?;
    let mut out = project_models(geometry, &[&poly, &mono], max_log, chords(spec))?;
    let reference = out.pop().expect("two models");
    Ok((out.pop().expect("two models"), reference))
}

/// Fan-beam line integral of a uniform disc at the mid-plane: `μ·2√(r²−s²)`
/// where `s` is the distance from the disc center to the ray `(β, u)`.
pub fn disc_line_integral(
    geometry: &ScanGeometry,
    beta: f64,
    u: f64,
    center: [f64; 2],
    radius: f64,
    mu: f64,
) -> f64 {
    let src = geometry.source(beta);
    let dst = geometry.detector_point(beta, u, 0.0);
    let d = [dst[0] - src[0], dst[1] - src[1]];
    let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let s = ((center[0] - src[0]) * d[1] - (center[1] - src[1]) * d[0]).abs() / n;
    if s >= radius {
        0.0
    } else {
        mu * 2.0 * (radius * radius - s * s).sqrt()
    }
}
