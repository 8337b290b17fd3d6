//! Stage orchestration over a run directory.
//!
//! Every stage reads its input from disk and writes its outputs next to it,
//! so any stage can be re-run from the intermediates of the previous one.
//!
//! ```text
//! <run>/manifest.json           simulation settings and derived constants
//! <run>/labels.raw              rasterized phantom
//! <run>/sinogram.raw            offset-detector polychromatic data P
//! <run>/reference_sinogram.raw  full monochromatic sinogram P_*
//! <run>/reference.raw           reference volume μ_*
//! <run>/<method>/volume.raw     uncorrected, baseline_li, stage1, stage2
//! ```

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

pub use config::{
    read_json, BaselineConfig, DenoiserConfig, ExperimentConfig, NoiseLevel, NoiseSetting,
    ReconConfig, Resolved, Source,
};
pub use report::{run_report, window_to_u8, MetricRow, Report, ReportOptions, METHODS};

use crate::baseline::{interpolate_metal_trace, TraceReport};
use crate::dcc::{corrector_apply, fit_params, FitReport};
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::io;
use crate::projector::{extrapolate_truncation, fdk_reconstruct};
use crate::reflect::reflect_fill;
use crate::simulate::{add_noise, materials, project_pair, rasterize_phantom, MaterialTable};
use crate::sinogram::{subsample_offset, Sinogram};
use crate::volume::Volume;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CBCT_THREADS";

/// Sizes the global worker pool from `CBCT_THREADS`; all cores when unset.
pub fn init_threads() -> Result<usize> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::Config(format!(
                    "{THREADS_ENV} must be a positive integer, got `{s}`"
                ))
            })?,
        Err(_) => 0,
    };
    // a second initialization keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(rayon::current_num_threads())
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub phantom: String,
    pub noise: String,
    pub seed: u64,
    pub e_star: f64,
    /// Water attenuation at `e_star`, for display calibration.
    pub mu_water: f64,
    pub geometry: ScanGeometry,
    pub clamped_rays: usize,
}

pub fn read_manifest(run: &Path) -> Result<Manifest> {
    read_json(&run.join(MANIFEST))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Standard file locations inside a run directory.
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunPaths { root: root.into() }
    }

    pub fn sinogram(&self) -> PathBuf {
        self.root.join("sinogram.raw")
    }

    pub fn reference_sinogram(&self) -> PathBuf {
        self.root.join("reference_sinogram.raw")
    }

    pub fn reference(&self) -> PathBuf {
        self.root.join("reference.raw")
    }

    pub fn labels(&self) -> PathBuf {
        self.root.join("labels.raw")
    }

    pub fn method_dir(&self, method: &str) -> PathBuf {
        self.root.join(method)
    }

    pub fn volume(&self, method: &str) -> PathBuf {
        self.method_dir(method).join("volume.raw")
    }
}

/// Reflection fill, extrapolation and FDK of an offset-detector sinogram.
fn reconstruct_offset(sino: &Sinogram, r: &Resolved) -> Result<(Sinogram, Volume)> {
    let filled = stored(reflect_fill(sino, &sino.geometry).map_err(|e| e.in_stage("reflect"))?);
    let volume = reconstruct_filled(&filled, r)?;
    Ok((filled, volume))
}

fn reconstruct_filled(filled: &Sinogram, r: &Resolved) -> Result<Volume> {
    let padded = extrapolate_truncation(filled, &r.config.reconstruction.extrapolation)
        .map_err(|e| e.in_stage("extrapolate"))?;
    fdk_reconstruct(&padded, &r.config.reconstruction.filter, &r.grid)
        .map_err(|e| e.in_stage("fdk"))
}

fn stored(mut sino: Sinogram) -> Sinogram {
    sino.data = io::as_stored(sino.data);
    sino
}

fn check_geometry(sino: &Sinogram, r: &Resolved) {
    if sino.geometry != r.geometry {
        log::warn!("input sinogram geometry differs from the configured one; using the sinogram's");
    }
}

/// Simulates the offset-detector scan and the monochromatic reference.
pub fn run_simulate(r: &Resolved) -> Result<Manifest> {
    let paths = RunPaths::new(&r.output_dir);
    let g = r.geometry;
    let labels = rasterize_phantom(&r.phantom).map_err(|e| e.in_stage("rasterize"))?;
    let table =
        MaterialTable::standard(&r.spectrum.energies).map_err(|e| e.in_stage("materials"))?;
    let (poly, mono) = project_pair(&labels, &table, &r.spectrum, r.e_star, &g, r.config.max_log)
        .map_err(|e| e.in_stage("project"))?;
    let mut p = subsample_offset(&poly, &g).map_err(|e| e.in_stage("subsample"))?;
    if let Some(noise) = &r.noise {
        p = add_noise(&p, noise, r.config.seed).map_err(|e| e.in_stage("noise"))?;
    }
    let p = stored(p);
    let mono = stored(mono);
    let reference_offset = subsample_offset(&mono, &g).map_err(|e| e.in_stage("subsample"))?;
    let (_, reference) =
        reconstruct_offset(&reference_offset, r).map_err(|e| e.in_stage("reference"))?;

    io::write_labels(&paths.labels(), &labels)?;
    io::write_sinogram(&paths.sinogram(), &p)?;
    io::write_sinogram(&paths.reference_sinogram(), &mono)?;
    io::write_volume(&paths.reference(), &reference)?;
    let manifest = Manifest {
        name: r.config.name.clone(),
        phantom: r.phantom.name.clone(),
        noise: r.config.noise.label(),
        seed: r.config.seed,
        e_star: r.e_star,
        mu_water: table.mu_at(materials::WATER as usize, r.e_star)?,
        geometry: g,
        clamped_rays: poly.clamped_rays,
    };
    if poly.clamped_rays > 0 {
        log::warn!(
            "{} rays clamped at max_log = {}",
            poly.clamped_rays,
            r.config.max_log
        );
    }
    write_json(&paths.root.join(MANIFEST), &manifest)?;
    log::info!("simulated {} into {}", r.config.name, paths.root.display());
    Ok(manifest)
}

/// Plain reconstruction without any beam-hardening correction.
pub fn run_reconstruct(r: &Resolved, input: &Path, out_dir: &Path) -> Result<Volume> {
    let sino = io::read_sinogram(input).map_err(|e| e.in_stage("read"))?;
    check_geometry(&sino, r);
    let (filled, volume) = reconstruct_offset(&sino, r)?;
    io::write_sinogram(&out_dir.join("filled_sinogram.raw"), &filled)?;
    io::write_volume(&out_dir.join("volume.raw"), &volume)?;
    Ok(volume)
}

/// Reflection fill, consistency fit, corrector, extrapolation and FDK.
pub fn run_stage1(r: &Resolved, input: &Path, out_dir: &Path) -> Result<FitReport> {
    let sino = io::read_sinogram(input).map_err(|e| e.in_stage("read"))?;
    check_geometry(&sino, r);
    let filled = stored(reflect_fill(&sino, &sino.geometry).map_err(|e| e.in_stage("reflect"))?);
    io::write_sinogram(&out_dir.join("filled_sinogram.raw"), &filled)?;
    let report = fit_params(&filled, &r.dcc, &r.config.fit).map_err(|e| e.in_stage("fit"))?;
    write_json(&out_dir.join("fit.json"), &report)?;
    if !report.monotone {
        return Err(Error::Numerical("fitted corrector is not increasing".into()).in_stage("fit"));
    }
    log::info!(
        "fit: cost {:.4e} -> {:.4e} after {} evaluations (y0 = {:.2}, threshold = {:.3})",
        report.initial_cost,
        report.final_cost,
        report.evaluations,
        report.y0,
        report.params.threshold
    );
    let corrected =
        stored(corrector_apply(&filled, &report.params).map_err(|e| e.in_stage("correct"))?);
    io::write_sinogram(&out_dir.join("corrected_sinogram.raw"), &corrected)?;
    let volume = reconstruct_filled(&corrected, r)?;
    io::write_volume(&out_dir.join("volume.raw"), &volume)?;
    Ok(report)
}

/// Metal-trace linear interpolation followed by the plain reconstruction.
pub fn run_baseline_li(
    r: &Resolved,
    input: &Path,
    out_dir: &Path,
    threshold: f64,
) -> Result<TraceReport> {
    let sino = io::read_sinogram(input).map_err(|e| e.in_stage("read"))?;
    check_geometry(&sino, r);
    let (interpolated, report) =
        interpolate_metal_trace(&sino, threshold).map_err(|e| e.in_stage("interpolate"))?;
    let interpolated = stored(interpolated);
    io::write_sinogram(&out_dir.join("interpolated_sinogram.raw"), &interpolated)?;
    write_json(&out_dir.join("trace.json"), &report)?;
    let (_, volume) = reconstruct_offset(&interpolated, r)?;
    io::write_volume(&out_dir.join("volume.raw"), &volume)?;
    Ok(report)
}

/// Hands a stage-1 volume to the external denoiser and checks what comes
/// back.
///
/// The command runs as `command... <input.raw> <out_dir/volume.raw>` and
/// must write little-endian f32 samples of the same shape. The JSON header
/// next to the output is written beforehand.
pub fn run_stage2(
    input: &Path,
    out_dir: &Path,
    denoiser: Option<&DenoiserConfig>,
) -> Result<Volume> {
    let unavailable = |msg: String| Error::SecondaryUnavailable(msg).in_stage("stage2");
    let cfg = denoiser.ok_or_else(|| unavailable("no denoiser command configured".into()))?;
    let (program, args) = cfg
        .command
        .split_first()
        .ok_or_else(|| unavailable("denoiser command is empty".into()))?;
    let volume = io::read_volume(input).map_err(|e| e.in_stage("read"))?;
    let output = out_dir.join("volume.raw");
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    // the denoiser only has to write samples; the header is provided
    io::write_sidecar(&output, &io::read_sidecar(input)?)?;
    let status = Command::new(program)
        .args(args)
        .arg(input)
        .arg(&output)
        .status()
        .map_err(|e| unavailable(format!("cannot start `{program}`: {e}")))?;
    if !status.success() {
        return Err(unavailable(format!("`{program}` exited with {status}")));
    }
    let denoised = io::read_volume(&output).map_err(|e| e.in_stage("stage2"))?;
    if denoised.grid.shape() != volume.grid.shape() {
        return Err(Error::Shape(format!(
            "denoiser returned {:?}, expected {:?}",
            denoised.grid.shape(),
            volume.grid.shape()
        ))
        .in_stage("stage2"));
    }
    // keep the stage-1 grid description; only the samples come from outside
    let out = Volume::from_data(volume.grid, denoised.data)?;
    io::write_volume(&output, &out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_variable_is_validated() {
        // only the parser is exercised; the pool itself is process-global
        std::env::set_var(THREADS_ENV, "zero");
        assert_eq!(init_threads().unwrap_err().exit_code(), 2);
        std::env::remove_var(THREADS_ENV);
        assert!(init_threads().unwrap() >= 1);
    }

    #[test]
    fn stage2_without_denoiser_is_unavailable() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_stage2(&dir.path().join("v.raw"), dir.path(), None).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let cfg = DenoiserConfig {
            command: vec!["/nonexistent/denoiser".into()],
        };
        let grid = crate::volume::VolumeGrid::centered(4, 4, 2, 1.0);
        io::write_volume(&dir.path().join("v.raw"), &Volume::zeros(grid)).unwrap();
        let err = run_stage2(
            &dir.path().join("v.raw"),
            &dir.path().join("s2"),
            Some(&cfg),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
