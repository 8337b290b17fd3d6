//! Metrics table and slice panels over finished runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_manifest, write_json, Manifest, RunPaths, MANIFEST};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::roi_scores;
use crate::volume::Volume;

/// Reconstruction methods in table order; each is a subdirectory of a run.
pub const METHODS: [&str; 4] = ["uncorrected", "baseline_li", "stage1", "stage2"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Display window center and width in HU.
    pub window_center: f64,
    pub window_width: f64,
    /// Slice shown in the panels; the central one when absent.
    pub slice: Option<usize>,
    pub write_png: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            window_center: 500.0,
            window_width: 5000.0,
            slice: None,
            write_png: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run: String,
    pub model: String,
    pub noise: String,
    pub method: String,
    pub nrmsd: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<MetricRow>,
    /// `run/method` cells without a volume.
    pub missing: Vec<String>,
    /// Runs where stage 1 scored a higher NRMSD than no correction.
    pub amplified: Vec<String>,
}

impl Report {
    pub fn get(&self, run: &str, method: &str) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.run == run && r.method == method)
    }

    /// Plain-text table: one line per run, NRMSD (%) / SSIM per method.
    pub fn table(&self) -> String {
        let mut runs: Vec<(&str, &str, &str)> = Vec::new();
        for r in &self.rows {
            if !runs.iter().any(|(n, _, _)| *n == r.run) {
                runs.push((&r.run, &r.model, &r.noise));
            }
        }
        let mut out = format!("{:<20} {:<10} {:<6}", "run", "model", "noise");
        for m in METHODS {
            let _ = write!(out, " {m:>17}");
        }
        out.push('\n');
        for (run, model, noise) in runs {
            let _ = write!(out, "{run:<20} {model:<10} {noise:<6}");
            for m in METHODS {
                let cell = match self.get(run, m) {
                    Some(r) => format!("{:.2} / {:.4}", r.nrmsd, r.ssim),
                    None => "-".into(),
                };
                let _ = write!(out, " {cell:>17}");
            }
            if self.amplified.iter().any(|a| a == run) {
                out.push_str("  *");
            }
            out.push('\n');
        }
        if !self.amplified.is_empty() {
            out.push_str("* stage 1 raised NRMSD over the uncorrected reconstruction\n");
        }
        out
    }
}

/// Maps an HU value through a display window onto 0..=255, clamping
/// outside `[C − W/2, C + W/2]`.
pub fn window_to_u8(hu: f64, center: f64, width: f64) -> u8 {
    let lo = center - width / 2.0;
    let t = ((hu - lo) / width).clamp(0.0, 1.0);
    (t * 255.0).round() as u8
}

fn find_runs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join(MANIFEST).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut runs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST).is_file())
        .collect();
    runs.sort();
    Ok(runs)
}

fn write_panel(
    path: &Path,
    volumes: &[&Volume],
    manifest: &Manifest,
    opts: &ReportOptions,
) -> Result<()> {
    let grid = volumes[0].grid;
    let k = opts.slice.unwrap_or(grid.nz / 2).min(grid.nz - 1);
    let (w, h) = (grid.nx, grid.ny);
    let mut buf = vec![0u8; w * volumes.len() * h];
    let stride = w * volumes.len();
    for (n, v) in volumes.iter().enumerate() {
        let slice = v.slice_z(k);
        for j in 0..h {
            for i in 0..w {
                let hu = 1000.0 * (slice[[j, i]] - manifest.mu_water) / manifest.mu_water;
                // image rows run top-down, +y up
                buf[(h - 1 - j) * stride + n * w + i] =
                    window_to_u8(hu, opts.window_center, opts.window_width);
            }
        }
    }
    let img = image::GrayImage::from_raw(stride as u32, h as u32, buf)
        .expect("buffer matches the image size");
    img.save(path)?;
    Ok(())
}

/// Scores every method volume of every run below `dir` against the run's
/// reference and writes `metrics.json`, `table.txt` and slice panels into
/// `out_dir`.
///
/// Missing volumes leave an empty cell. A directory without runs still
/// produces an (empty) table, then fails.
pub fn run_report(dir: &Path, out_dir: &Path, opts: &ReportOptions) -> Result<Report> {
    let runs = find_runs(dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut report = Report::default();
    for run in &runs {
        let manifest = read_manifest(run)?;
        let paths = RunPaths::new(run);
        let run_name = run
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| manifest.name.clone());
        let reference = io::read_volume(&paths.reference()).map_err(|e| e.in_stage("report"))?;
        let mut shown = vec![reference.clone()];
        for method in METHODS {
            let path = paths.volume(method);
            if !path.is_file() {
                log::info!("{run_name}: no {method} volume");
                report.missing.push(format!("{run_name}/{method}"));
                continue;
            }
            let volume = io::read_volume(&path).map_err(|e| e.in_stage("report"))?;
            let s = roi_scores(&volume, &reference, manifest.geometry.roi_radius())
                .map_err(|e| e.in_stage("report"))?;
            report.rows.push(MetricRow {
                run: run_name.clone(),
                model: manifest.phantom.clone(),
                noise: manifest.noise.clone(),
                method: method.into(),
                nrmsd: s.nrmsd,
                ssim: s.ssim,
            });
            shown.push(volume);
        }
        if let (Some(u), Some(s)) = (
            report.get(&run_name, "uncorrected"),
            report.get(&run_name, "stage1"),
        ) {
            if s.nrmsd > u.nrmsd {
                log::info!(
                    "{run_name}: stage 1 raised NRMSD from {:.2} to {:.2} (noise amplification)",
                    u.nrmsd,
                    s.nrmsd
                );
                report.amplified.push(run_name.clone());
            }
        }
        if opts.write_png {
            let refs: Vec<&Volume> = shown.iter().collect();
            write_panel(
                &out_dir.join(format!("{run_name}.png")),
                &refs,
                &manifest,
                opts,
            )?;
        }
    }
    write_json(&out_dir.join("metrics.json"), &report)?;
    std::fs::write(out_dir.join("table.txt"), report.table()).map_err(|e| Error::io(out_dir, e))?;
    if runs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no runs found below {}",
            dir.display()
        )));
    }
    Ok(report)
}
