//! Experiment configuration.
//!
//! One JSON document per experiment. Each sub-configuration is either a
//! bundled name, a path to a JSON file (relative to the experiment file),
//! or an inline object.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dcc::{ConsistencyConfig, FitOptions};
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::projector::{ExtrapolationSpec, FilterSpec};
use crate::simulate::{bundled, EnergySpectrum, NoiseConfig, PhantomSpec, DEFAULT_MAX_LOG};
use crate::volume::VolumeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Named(String),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    /// Resolves a bundled name through `bundled`, otherwise reads the name
    /// as a JSON file below `base`.
    fn resolve(&self, base: &Path, what: &str, bundled: impl Fn(&str) -> Option<T>) -> Result<T> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Named(name) => match bundled(name) {
                Some(v) => Ok(v),
                None => read_json(&base.join(name)).map_err(|e| match e {
                    Error::Io { path, .. } => Error::Config(format!(
                        "{what} `{name}` is neither a bundled name nor a readable file ({})",
                        path.display()
                    )),
                    other => other,
                }),
            },
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Noise level: `"none"`, `"low"`, `"high"`, or explicit counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSetting {
    Level(NoiseLevel),
    Custom(NoiseConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLevel {
    None,
    Low,
    High,
}

impl NoiseSetting {
    pub fn config(&self) -> Option<NoiseConfig> {
        match *self {
            NoiseSetting::Level(NoiseLevel::None) => None,
            NoiseSetting::Level(NoiseLevel::Low) => Some(NoiseConfig::low()),
            NoiseSetting::Level(NoiseLevel::High) => Some(NoiseConfig::high()),
            NoiseSetting::Custom(c) => Some(c),
        }
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        match *self {
            NoiseSetting::Level(NoiseLevel::None) => "none".into(),
            NoiseSetting::Level(NoiseLevel::Low) => "low".into(),
            NoiseSetting::Level(NoiseLevel::High) => "high".into(),
            NoiseSetting::Custom(c) => format!("i0={}", c.i0),
        }
    }
}

impl Default for NoiseSetting {
    fn default() -> Self {
        NoiseSetting::Level(NoiseLevel::Low)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconConfig {
    pub nx: usize,
    pub ny: usize,
    /// Slices; one per detector row when absent.
    pub nz: Option<usize>,
    /// Voxel pitch (mm); the geometry's when absent.
    pub pitch: Option<f64>,
    pub filter: FilterSpec,
    pub extrapolation: ExtrapolationSpec,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            nx: 256,
            ny: 256,
            nz: None,
            pitch: None,
            filter: FilterSpec::default(),
            extrapolation: ExtrapolationSpec::default(),
        }
    }
}

impl ReconConfig {
    pub fn grid(&self, geometry: &ScanGeometry) -> VolumeGrid {
        let pitch = self.pitch.unwrap_or(geometry.voxel_pitch);
        let nz = self
            .nz
            .unwrap_or_else(|| ((2.0 * geometry.v_extent / pitch).round() as usize).max(1));
        VolumeGrid::centered(self.nx, self.ny, nz, pitch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Sinogram value above which a sample counts as metal trace.
    pub threshold: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { threshold: 5.5 }
    }
}

/// External stage-2 denoiser, invoked as `command... <input.raw> <output.raw>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserConfig {
    pub command: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_geometry")]
    pub geometry: Source<ScanGeometry>,
    #[serde(default = "default_phantom")]
    pub phantom: Source<PhantomSpec>,
    /// Two-column CSV spectrum; the bundled 90 kVp spectrum when absent.
    #[serde(default)]
    pub spectrum: Option<PathBuf>,
    /// Reference energy (keV); the spectrum's mean when absent.
    #[serde(default)]
    pub e_star: Option<f64>,
    #[serde(default)]
    pub noise: NoiseSetting,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_log")]
    pub max_log: f64,
    #[serde(default = "default_dcc")]
    pub dcc: Source<ConsistencyConfig>,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub reconstruction: ReconConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub denoiser: Option<DenoiserConfig>,
    /// Run directory, relative to the working directory; `runs/<name>`
    /// when absent.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_geometry() -> Source<ScanGeometry> {
    Source::Named("desk".into())
}

fn default_phantom() -> Source<PhantomSpec> {
    Source::Named("model1".into())
}

fn default_dcc() -> Source<ConsistencyConfig> {
    Source::Inline(ConsistencyConfig::default())
}

fn default_max_log() -> f64 {
    DEFAULT_MAX_LOG
}

fn bundled_geometry(name: &str) -> Option<ScanGeometry> {
    match name {
        "desk" => Some(ScanGeometry::desk()),
        "full-scale" => Some(ScanGeometry::full_scale()),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentConfig {
            name: name.into(),
            geometry: default_geometry(),
            phantom: default_phantom(),
            spectrum: None,
            e_star: None,
            noise: NoiseSetting::default(),
            seed: 0,
            max_log: DEFAULT_MAX_LOG,
            dcc: default_dcc(),
            fit: FitOptions::default(),
            reconstruction: ReconConfig::default(),
            baseline: BaselineConfig::default(),
            denoiser: None,
            output_dir: None,
        }
    }

    pub fn load(path: &Path) -> Result<Resolved> {
        let cfg: ExperimentConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base)
    }

    /// Resolves every reference relative to `base` and validates the result.
    pub fn resolve(&self, base: &Path) -> Result<Resolved> {
        let geometry = self.geometry.resolve(base, "geometry", bundled_geometry)?;
        geometry.validate()?;
        let phantom = self.phantom.resolve(base, "phantom", bundled::by_name)?;
        phantom.validate()?;
        let spectrum = match &self.spectrum {
            Some(p) => EnergySpectrum::from_csv(&base.join(p))?,
            None => EnergySpectrum::bundled_w90_cu05(),
        };
        let e_star = self.e_star.unwrap_or_else(|| spectrum.mean_energy());
        if !(e_star >= spectrum.min_energy() && e_star <= spectrum.max_energy()) {
            return Err(Error::Config(format!(
                "e_star = {e_star} keV lies outside the spectrum [{}, {}]",
                spectrum.min_energy(),
                spectrum.max_energy()
            )));
        }
        if let Some(n) = self.noise.config() {
            n.validate()?;
        }
        if !(self.max_log > 0.0 && self.max_log.is_finite()) {
            return Err(Error::Config("max_log must be positive".into()));
        }
        let dcc = self.dcc.resolve(base, "dcc config", |_| None)?;
        dcc.validate()?;
        if !(self.baseline.threshold > 0.0) {
            return Err(Error::Config("baseline threshold must be positive".into()));
        }
        let grid = self.reconstruction.grid(&geometry);
        grid.validate()?;
        let output_dir = match &self.output_dir {
            Some(p) => p.clone(),
            None => Path::new("runs").join(&self.name),
        };
        Ok(Resolved {
            config: self.clone(),
            geometry,
            phantom,
            spectrum,
            e_star,
            noise: self.noise.config(),
            dcc,
            grid,
            output_dir,
        })
    }
}

/// A validated experiment with every reference loaded.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub geometry: ScanGeometry,
    pub phantom: PhantomSpec,
    pub spectrum: EnergySpectrum,
    pub e_star: f64,
    pub noise: Option<NoiseConfig>,
    pub dcc: ConsistencyConfig,
    pub grid: VolumeGrid,
    pub output_dir: PathBuf,
}
