use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel grid; `origin` is the position of the grid center (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub pitch: f64,
    #[serde(default)]
    pub origin: [f64; 3],
}

impl VolumeGrid {
    pub fn centered(nx: usize, ny: usize, nz: usize, pitch: f64) -> Self {
        VolumeGrid {
            nx,
            ny,
            nz,
            pitch,
            origin: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(Error::Shape("empty volume dimensions".into()));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(Error::InvalidInput("voxel pitch must be positive".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nz, self.ny, self.nx)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + (i as f64 + 0.5 - self.nx as f64 / 2.0) * self.pitch
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin[1] + (j as f64 + 0.5 - self.ny as f64 / 2.0) * self.pitch
    }

    pub fn z(&self, k: usize) -> f64 {
        self.origin[2] + (k as f64 + 0.5 - self.nz as f64 / 2.0) * self.pitch
    }

    /// Continuous index of world coordinate `p` along each axis (x, y, z).
    pub fn index_of(&self, p: [f64; 3]) -> [f64; 3] {
        [
            (p[0] - self.origin[0]) / self.pitch + self.nx as f64 / 2.0 - 0.5,
            (p[1] - self.origin[1]) / self.pitch + self.ny as f64 / 2.0 - 0.5,
            (p[2] - self.origin[2]) / self.pitch + self.nz as f64 / 2.0 - 0.5,
        ]
    }

    /// Mask of voxels whose (x, y) center lies within `radius` of the axis.
    pub fn cylinder_mask(&self, radius: f64) -> Array3<bool> {
        Array3::from_shape_fn(self.shape(), |(_, j, i)| {
            let (x, y) = (self.x(i), self.y(j));
            x * x + y * y <= radius * radius
        })
    }
}

/// Attenuation volume (1/mm), stored `(z, y, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub grid: VolumeGrid,
    pub data: Array3<f64>,
}

impl Volume {
    pub fn zeros(grid: VolumeGrid) -> Self {
        Volume {
            data: Array3::zeros(grid.shape()),
            grid,
        }
    }

    pub fn from_data(grid: VolumeGrid, data: Array3<f64>) -> Result<Self> {
        if data.dim() != grid.shape() {
            return Err(Error::Shape(format!(
                "volume data {:?} does not match grid {:?}",
                data.dim(),
                grid.shape()
            )));
        }
        Ok(Volume { grid, data })
    }

    pub fn from_fn(grid: VolumeGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let data =
            Array3::from_shape_fn(grid.shape(), |(k, j, i)| f(grid.x(i), grid.y(j), grid.z(k)));
        Volume { grid, data }
    }

    /// Checks the physical-volume invariant: finite and non-negative.
    pub fn check_physical(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "attenuation volume has negative or non-finite voxels".into(),
            ));
        }
        Ok(())
    }

    pub fn slice_z(&self, k: usize) -> ndarray::ArrayView2<'_, f64> {
        self.data.index_axis(ndarray::Axis(0), k)
    }
}

/// Material-label volume produced by phantom rasterization.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    pub grid: VolumeGrid,
    pub labels: Array3<u8>,
}

impl LabelVolume {
    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn max_label(&self) -> u8 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Attenuation volume with `mu[label]` in every voxel.
    pub fn to_attenuation(&self, mu: &[f64]) -> Result<Volume> {
        let max = self.max_label() as usize;
        if max >= mu.len() {
            return Err(Error::InvalidInput(format!(
                "label {max} has no attenuation value"
            )));
        }
        Ok(Volume {
            grid: self.grid,
            data: self.labels.mapv(|l| mu[l as usize]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_centered() {
        let g = VolumeGrid::centered(4, 4, 3, 0.5);
        assert_eq!(g.x(0), -0.75);
        assert_eq!(g.x(3), 0.75);
        assert_eq!(g.z(1), 0.0);
        assert_eq!(g.index_of([g.x(2), g.y(1), g.z(0)]), [2.0, 1.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = VolumeGrid::centered(4, 4, 3, 0.5);
        assert!(Volume::from_data(g, Array3::zeros((3, 4, 5))).is_err());
        assert!(VolumeGrid::centered(0, 4, 3, 0.5).validate().is_err());
    }

    #[test]
    fn physical_check() {
        let g = VolumeGrid::centered(2, 2, 1, 1.0);
        let mut v = Volume::zeros(g);
        assert!(v.check_physical().is_ok());
        v.data[[0, 0, 0]] = -1.0;
        assert!(v.check_physical().is_err());
    }
}
