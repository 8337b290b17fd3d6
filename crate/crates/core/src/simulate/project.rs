//! Polychromatic and monochromatic sinograms from material path lengths.

use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::projector::{check_volume, for_each_ray_multi, joseph::trace};
use crate::simulate::materials::{MaterialTable, MAX_MATERIALS};
use crate::simulate::spectrum::EnergySpectrum;
use crate::sinogram::Sinogram;
use crate::volume::LabelVolume;

/// Log-attenuation at which a ray is treated as fully opaque.
pub const DEFAULT_MAX_LOG: f64 = 20.0;

pub(crate) type Paths = [f64; MAX_MATERIALS];

/// Spectral model: per-energy weights and attenuation rows.
#[derive(Debug, Clone)]
pub(crate) struct SpectralModel {
    weights: Vec<f64>,
    /// `mu[e][m]`, 1/mm; zero for materials outside the table.
    mu: Vec<Paths>,
}

impl SpectralModel {
    pub(crate) fn polychromatic(table: &MaterialTable, spectrum: &EnergySpectrum) -> Result<Self> {
        if table.energies.len() != spectrum.energies.len()
            || table
                .energies
                .iter()
                .zip(&spectrum.energies)
                .any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(Error::InvalidInput(
                "material table is not sampled on the spectrum energies".into(),
            ));
        }
        let mu = (0..spectrum.energies.len())
            .map(|e| {
                let mut row = [0.0; MAX_MATERIALS];
                for (m, curve) in table.mu.iter().enumerate() {
                    row[m] = curve[e];
                }
                row
            })
            .collect();
        Ok(SpectralModel {
            weights: spectrum.weights.clone(),
            mu,
        })
    }

    pub(crate) fn monochromatic(table: &MaterialTable, e_star: f64) -> Result<Self> {
        let (lo, hi) = match (table.energies.first(), table.energies.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::InvalidInput("empty material table".into())),
        };
        if !(e_star >= lo && e_star <= hi) {
            return Err(Error::InvalidInput(format!(
                "reference energy {e_star} keV outside the table range [{lo}, {hi}]"
            )));
        }
        let mut row = [0.0; MAX_MATERIALS];
        for (m, value) in row.iter_mut().enumerate().take(table.len()) {
            *value = table.mu_at(m, e_star)?;
        }
        Ok(SpectralModel {
            weights: vec![1.0],
            mu: vec![row],
        })
    }

    /// `−ln Σ_E η(E)·exp(−Σ_m μ_m(E)·L_m)`, evaluated relative to the
    /// smallest exponent so opaque rays do not underflow to `ln 0`.
    pub(crate) fn log_attenuation(&self, paths: &Paths) -> f64 {
        let exps: Vec<f64> = self
            .mu
            .iter()
            .map(|row| row.iter().zip(paths).map(|(m, l)| m * l).sum::<f64>())
            .collect();
        if exps.len() == 1 {
            return exps[0];
        }
        let a_min = exps.iter().copied().fold(f64::INFINITY, f64::min);
        let s: f64 = self
            .weights
            .iter()
            .zip(&exps)
            .map(|(w, a)| w * (-(a - a_min)).exp())
            .sum();
        a_min - s.ln()
    }
}

/// Per-material path lengths of the ray `src → dst` through a label grid.
pub(crate) fn label_paths(
    labels: &LabelVolume,
    flat: &[u8],
    src: [f64; 3],
    dst: [f64; 3],
) -> Paths {
    let mut paths = [0.0; MAX_MATERIALS];
    trace(&labels.grid, src, dst, |idx, w| {
        paths[flat[idx] as usize] += w
    });
    paths
}

fn check_labels(labels: &LabelVolume, table: &MaterialTable) -> Result<()> {
    check_volume(&labels.grid)?;
    let max = labels.max_label() as usize;
    if max >= table.len() || max >= MAX_MATERIALS {
        return Err(Error::InvalidInput(format!(
            "label {max} is not covered by the material table"
        )));
    }
    Ok(())
}

/// Builds one sinogram per spectral model from a single path-length
/// pass, clamping each at `max_log`.
pub(crate) fn project_models(
    geometry: &ScanGeometry,
    models: &[&SpectralModel],
    max_log: f64,
    paths: impl Fn([f64; 3], [f64; 3]) -> Paths + Sync,
) -> Result<Vec<Sinogram>> {
    geometry.validate()?;
    if !(max_log > 0.0) {
        return Err(Error::InvalidInput(
            "max log-attenuation must be positive".into(),
        ));
    }
    let arrays = for_each_ray_multi(geometry, models.len(), |src, dst, out| {
        let p = paths(src, dst);
        for (slot, m) in out.iter_mut().zip(models) {
            *slot = m.log_attenuation(&p);
        }
    });
    arrays
        .into_iter()
        .map(|mut data| {
            let mut clamped = 0;
            for v in data.iter_mut() {
                if !(*v < max_log) {
                    *v = max_log;
                    clamped += 1;
                }
            }
            let mut sino = Sinogram::from_data(*geometry, geometry.detector(), data)?;
            sino.clamped_rays = clamped;
            if clamped > 0 {
                log::warn!("{clamped} rays clamped at log-attenuation {max_log}");
            }
            Ok(sino)
        })
        .collect()
}

/// Full (untruncated) polychromatic sinogram of a label phantom.
pub fn polychromatic_project(
    labels: &LabelVolume,
    table: &MaterialTable,
    spectrum: &EnergySpectrum,
    geometry: &ScanGeometry,
) -> Result<Sinogram> {
    check_labels(labels, table)?;
    let model = SpectralModel::polychromatic(table, spectrum)?;
    let flat = flat_labels(labels);
    let mut out = project_models(geometry, &[&model], DEFAULT_MAX_LOG, |s, d| {
        label_paths(labels, &flat, s, d)
    })?;
    Ok(out.remove(0))
}

/// Monochromatic line integrals at `e_star` keV.
pub fn reference_sinogram(
    labels: &LabelVolume,
    table: &MaterialTable,
    e_star: f64,
    geometry: &ScanGeometry,
) -> Result<Sinogram> {
    check_labels(labels, table)?;
    let model = SpectralModel::monochromatic(table, e_star)?;
    let flat = flat_labels(labels);
    let mut out = project_models(geometry, &[&model], DEFAULT_MAX_LOG, |s, d| {
        label_paths(labels, &flat, s, d)
    })?;
    Ok(out.remove(0))
}

/// Polychromatic and reference sinograms sharing one tracing pass.
pub fn project_pair(
    labels: &LabelVolume,
    table: &MaterialTable,
    spectrum: &EnergySpectrum,
    e_star: f64,
    geometry: &ScanGeometry,
    max_log: f64,
) -> Result<(Sinogram, Sinogram)> {
    check_labels(labels, table)?;
    let poly = SpectralModel::polychromatic(table, spectrum)?;
    let mono = SpectralModel::monochromatic(table, e_star)?;
    let flat = flat_labels(labels);
    let mut out = project_models(geometry, &[&poly, &mono], max_log, |s, d| {
        label_paths(labels, &flat, s, d)
    })?;
    let reference = out.pop().expect("two models");
    Ok((out.pop().expect("two models"), reference))
}

fn flat_labels(labels: &LabelVolume) -> Vec<u8> {
    labels.labels.as_standard_layout().iter().copied().collect()
}
