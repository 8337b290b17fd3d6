//! Raw little-endian `f32` arrays with a JSON sidecar.
//!
//! `name.raw` holds the samples in row-major order of `shape`; `name.json`
//! describes them. Volumes are `(z, y, x)`, sinograms `(view, v, u)`.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DetectorGrid, ScanGeometry};
use crate::sinogram::Sinogram;
use crate::volume::{LabelVolume, Volume, VolumeGrid};

pub const FORMAT_TAG: &str = "cbct-raw-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Volume,
    Labels,
    Sinogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub kind: ArrayKind,
    pub dtype: String,
    pub shape: [usize; 3],
    pub axes: [String; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<VolumeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<ScanGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<Vec<u8>>,
    #[serde(default)]
    pub noisy: bool,
    #[serde(default)]
    pub clamped_rays: usize,
}

/// Sidecar path for a raw file (`x.raw` -> `x.json`).
pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

fn write_raw(path: &Path, data: &Array3<f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for &v in data.iter() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_raw(path: &Path, shape: [usize; 3]) -> Result<Array3<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let n = shape.iter().product::<usize>();
    if bytes.len() != 4 * n {
        return Err(Error::Shape(format!(
            "{}: {} bytes, expected {} for shape {:?}",
            path.display(),
            bytes.len(),
            4 * n,
            shape
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Array3::from_shape_vec((shape[0], shape[1], shape[2]), values)
        .map_err(|e| Error::Shape(e.to_string()))
}

/// Rounds samples to what a raw file stores, so a stage continuing from
/// memory sees exactly what a re-run from disk would read.
pub fn as_stored(mut data: Array3<f64>) -> Array3<f64> {
    data.mapv_inplace(|v| v as f32 as f64);
    data
}

pub fn write_sidecar(raw: &Path, sidecar: &Sidecar) -> Result<()> {
    let path = sidecar_path(raw);
    let text = serde_json::to_string_pretty(sidecar).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_sidecar(raw: &Path) -> Result<Sidecar> {
    let path = sidecar_path(raw);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sc: Sidecar = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if sc.format != FORMAT_TAG || sc.dtype != "f32le" {
        return Err(Error::Config(format!(
            "{}: unsupported format {} / dtype {}",
            path.display(),
            sc.format,
            sc.dtype
        )));
    }
    Ok(sc)
}

fn volume_sidecar(kind: ArrayKind, grid: VolumeGrid) -> Sidecar {
    Sidecar {
        format: FORMAT_TAG.into(),
        kind,
        dtype: "f32le".into(),
        shape: [grid.nz, grid.ny, grid.nx],
        axes: ["z".into(), "y".into(), "x".into()],
        grid: Some(grid),
        geometry: None,
        detector: None,
        measured: None,
        noisy: false,
        clamped_rays: 0,
    }
}

pub fn write_volume(raw: &Path, volume: &Volume) -> Result<()> {
    write_raw(raw, &volume.data)?;
    write_sidecar(raw, &volume_sidecar(ArrayKind::Volume, volume.grid))
}

pub fn read_volume(raw: &Path) -> Result<Volume> {
    let sc = read_sidecar(raw)?;
    if sc.kind != ArrayKind::Volume {
        return Err(Error::Config(format!("{} is not a volume", raw.display())));
    }
    let grid = sc
        .grid
        .ok_or_else(|| Error::Config(format!("{}: sidecar lacks grid", raw.display())))?;
    if sc.shape != [grid.nz, grid.ny, grid.nx] {
        return Err(Error::Shape(format!(
            "{}: shape disagrees with grid",
            raw.display()
        )));
    }
    Volume::from_data(grid, read_raw(raw, sc.shape)?)
}

pub fn write_labels(raw: &Path, labels: &LabelVolume) -> Result<()> {
    write_raw(raw, &labels.labels.mapv(f64::from))?;
    write_sidecar(raw, &volume_sidecar(ArrayKind::Labels, labels.grid))
}

pub fn read_labels(raw: &Path) -> Result<LabelVolume> {
    let sc = read_sidecar(raw)?;
    let grid = sc
        .grid
        .filter(|_| sc.kind == ArrayKind::Labels)
        .ok_or_else(|| Error::Config(format!("{} is not a label volume", raw.display())))?;
    let data = read_raw(raw, sc.shape)?;
    Ok(LabelVolume {
        grid,
        labels: data.mapv(|v| v as u8),
    })
}

pub fn write_sinogram(raw: &Path, sino: &Sinogram) -> Result<()> {
    write_raw(raw, &sino.data)?;
    let (nb, nv, nu) = sino.data.dim();
    let sc = Sidecar {
        format: FORMAT_TAG.into(),
        kind: ArrayKind::Sinogram,
        dtype: "f32le".into(),
        shape: [nb, nv, nu],
        axes: ["beta".into(), "v".into(), "u".into()],
        grid: None,
        geometry: Some(sino.geometry),
        detector: Some(sino.grid),
        measured: Some(sino.measured.iter().map(|&m| m as u8).collect()),
        noisy: sino.noisy,
        clamped_rays: sino.clamped_rays,
    };
    write_sidecar(raw, &sc)
}

pub fn read_sinogram(raw: &Path) -> Result<Sinogram> {
    let sc = read_sidecar(raw)?;
    if sc.kind != ArrayKind::Sinogram {
        return Err(Error::Config(format!(
            "{} is not a sinogram",
            raw.display()
        )));
    }
    let missing = || Error::Config(format!("{}: incomplete sinogram sidecar", raw.display()));
    let geometry = sc.geometry.ok_or_else(missing)?;
    let grid = sc.detector.ok_or_else(missing)?;
    geometry.validate()?;
    let mut sino = Sinogram::from_data(geometry, grid, read_raw(raw, sc.shape)?)?;
    if let Some(mask) = sc.measured {
        if mask.len() != grid.n_u {
            return Err(Error::Shape(format!("{}: mask length", raw.display())));
        }
        sino.measured = mask.into_iter().map(|m| m != 0).collect();
    }
    sino.noisy = sc.noisy;
    sino.clamped_rays = sc.clamped_rays;
    Ok(sino)
}
