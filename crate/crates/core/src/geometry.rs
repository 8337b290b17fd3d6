//! Circular-orbit scan geometry with an offset flat-panel detector.
//!
//! Detector coordinates `(u, v)` live on a virtual detector through the
//! rotation axis, so every `u` here is already at isocenter scale. The source
//! sits at `R·(−sin β, cos β, 0)` and the detector `u` axis points along
//! `−(cos β, sin β, 0)`; with that orientation the conjugate of ray `(β, u)` is
//! `(β + π + 2·atan(−u/R), −u)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into the half-open interval `[0, 2π)`.
pub fn wrap_angle(beta: f64) -> f64 {
    let w = beta - TAU * (beta / TAU).floor();
    // floor can leave w == TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGeometry {
    /// Source-to-isocenter distance (mm).
    #[serde(rename = "R")]
    pub source_radius: f64,
    /// Source-to-detector distance (mm). Only used when converting from a
    /// physical detector pitch.
    #[serde(rename = "D")]
    pub source_detector_distance: f64,
    /// Short-arm extent of the offset detector (mm, isocenter scale).
    pub eps: f64,
    /// Long-arm extent of the offset detector (mm, isocenter scale).
    pub ell: f64,
    /// Half-width of the full, untruncated projection support (mm).
    pub ell_full: f64,
    pub n_views: usize,
    /// Detector samples spanning `[−ell_full, ell_full]`.
    pub n_u: usize,
    pub n_v: usize,
    /// Axial detector half-height (mm, isocenter scale).
    pub v_extent: f64,
    pub voxel_pitch: f64,
}

/// Uniform detector sampling, centered on the rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorGrid {
    pub n_u: usize,
    pub du: f64,
    pub n_v: usize,
    pub dv: f64,
}

impl DetectorGrid {
    pub fn u(&self, j: usize) -> f64 {
        (j as f64 + 0.5 - self.n_u as f64 / 2.0) * self.du
    }

    pub fn v(&self, k: usize) -> f64 {
        (k as f64 + 0.5 - self.n_v as f64 / 2.0) * self.dv
    }

    /// Fractional u index of position `u`.
    pub fn u_index(&self, u: f64) -> f64 {
        u / self.du + self.n_u as f64 / 2.0 - 0.5
    }

    pub fn v_index(&self, v: f64) -> f64 {
        v / self.dv + self.n_v as f64 / 2.0 - 0.5
    }

    /// Index of the sample at `−u(j)`; exact because the grid is symmetric.
    pub fn mirror_u(&self, j: usize) -> usize {
        self.n_u - 1 - j
    }

    /// Row at `v = 0`, if the grid has one.
    pub fn center_row(&self) -> Option<usize> {
        (self.n_v % 2 == 1).then_some(self.n_v / 2)
    }
}

impl ScanGeometry {
    /// Desk-scale default: 360 views, 256 detector samples at 0.5 mm with a
    /// 24-sample short arm.
    pub fn desk() -> Self {
        ScanGeometry {
            source_radius: 500.0,
            source_detector_distance: 1000.0,
            eps: 12.0,
            ell: 52.0,
            ell_full: 64.0,
            n_views: 360,
            n_u: 256,
            n_v: 9,
            v_extent: 2.25,
            voxel_pitch: 0.5,
        }
    }

    /// Full-scale configuration: 720 views, 654 measured samples of which 605
    /// lie on the long arm, 658 detector rows.
    pub fn full_scale() -> Self {
        let du = 0.2;
        ScanGeometry {
            source_radius: 500.0,
            source_detector_distance: 1000.0,
            eps: 49.0 * du,
            ell: 605.0 * du,
            ell_full: 700.0 * du,
            n_views: 720,
            n_u: 1400,
            n_v: 658,
            v_extent: 329.0 * du,
            voxel_pitch: 0.15,
        }
    }

    /// Builds a geometry from physical detector measurements, scaling them
    /// once onto the virtual detector at isocenter.
    #[allow(clippy::too_many_arguments)]
    pub fn from_physical_detector(
        source_radius: f64,
        source_detector_distance: f64,
        pitch: f64,
        short_arm_samples: usize,
        long_arm_samples: usize,
        full_half_samples: usize,
        n_v: usize,
        n_views: usize,
        voxel_pitch: f64,
    ) -> Result<Self> {
        if !(source_detector_distance > source_radius && source_radius > 0.0) {
            return Err(Error::Geometry("need 0 < R < D".into()));
        }
        let du = pitch * source_radius / source_detector_distance;
        let g = ScanGeometry {
            source_radius,
            source_detector_distance,
            eps: short_arm_samples as f64 * du,
            ell: long_arm_samples as f64 * du,
            ell_full: full_half_samples as f64 * du,
            n_views,
            n_u: 2 * full_half_samples,
            n_v,
            v_extent: n_v as f64 * du / 2.0,
            voxel_pitch,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.source_radius,
            self.source_detector_distance,
            self.eps,
            self.ell,
            self.ell_full,
            self.v_extent,
            self.voxel_pitch,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Geometry("non-finite field".into()));
        }
        if self.source_radius <= 0.0 {
            return Err(Error::Geometry("R must be positive".into()));
        }
        // eps == ell is accepted: that is a centered, fully measured detector.
        if !(0.0 < self.eps && self.eps <= self.ell && self.ell <= self.ell_full) {
            return Err(Error::Geometry(format!(
                "need 0 < eps <= ell <= ell_full, got eps={}, ell={}, ell_full={}",
                self.eps, self.ell, self.ell_full
            )));
        }
        if self.ell_full >= self.source_radius {
            return Err(Error::Geometry("ell_full must be smaller than R".into()));
        }
        if self.n_views < 4 {
            return Err(Error::Geometry("need at least 4 views".into()));
        }
        if self.n_u < 2 || self.n_v < 1 {
            return Err(Error::Geometry("empty detector".into()));
        }
        if self.v_extent <= 0.0 || self.voxel_pitch <= 0.0 {
            return Err(Error::Geometry(
                "v_extent and voxel_pitch must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn du(&self) -> f64 {
        2.0 * self.ell_full / self.n_u as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.v_extent / self.n_v as f64
    }

    pub fn detector(&self) -> DetectorGrid {
        DetectorGrid {
            n_u: self.n_u,
            du: self.du(),
            n_v: self.n_v,
            dv: self.dv(),
        }
    }

    pub fn delta_beta(&self) -> f64 {
        TAU / self.n_views as f64
    }

    pub fn beta(&self, i: usize) -> f64 {
        i as f64 * self.delta_beta()
    }

    /// Radius of the region seen by every view through `[−ell, ell]`.
    pub fn roi_radius(&self) -> f64 {
        let r = self.source_radius;
        r * self.ell / (r * r + self.ell * self.ell).sqrt()
    }

    /// Radius of the region covered by `[−ell_full, ell_full]`.
    pub fn support_radius(&self) -> f64 {
        let r = self.source_radius;
        r * self.ell_full / (r * r + self.ell_full * self.ell_full).sqrt()
    }

    pub fn source(&self, beta: f64) -> [f64; 3] {
        let r = self.source_radius;
        [-r * beta.sin(), r * beta.cos(), 0.0]
    }

    /// Point on the virtual detector for `(β, u, v)`.
    pub fn detector_point(&self, beta: f64, u: f64, v: f64) -> [f64; 3] {
        [-u * beta.cos(), -u * beta.sin(), v]
    }

    /// Distance from the source to the plane through `(x, y)` parallel to
    /// the detector.
    pub fn depth(&self, beta: f64, x: f64, y: f64) -> f64 {
        self.source_radius + x * beta.sin() - y * beta.cos()
    }

    /// Projects `(x, y, z)` onto the virtual detector at view `β`; returns
    /// `(u, v, depth)`.
    pub fn project(&self, beta: f64, x: f64, y: f64, z: f64) -> (f64, f64, f64) {
        let (s, c) = beta.sin_cos();
        let r = self.source_radius;
        let depth = r + x * s - y * c;
        (-r * (x * c + y * s) / depth, r * z / depth, depth)
    }

    /// Whether `u` lies on the measured part `[−eps, ell]` of the detector.
    pub fn is_measured(&self, u: f64) -> bool {
        let tol = 1e-9 * self.du();
        u >= -self.eps - tol && u <= self.ell + tol
    }
}

/// Angle of the conjugate ray: `β + π + 2·atan(−u/R)` wrapped to `[0, 2π)`.
pub fn conjugate_angle(beta: f64, u: f64, geometry: &ScanGeometry) -> Result<f64> {
    let r = geometry.source_radius;
    if !(beta.is_finite() && u.is_finite() && r.is_finite()) {
        return Err(Error::InvalidInput(
            "non-finite conjugate_angle input".into(),
        ));
    }
    if r <= 0.0 {
        return Err(Error::Geometry("R must be positive".into()));
    }
    Ok(wrap_angle(beta + PI + 2.0 * (-u / r).atan()))
}

/// Cosine blend weight on the overlap `(−ε, ε)`: 1 at `−ε`, 0 at `ε`.
pub fn blend_weight(u: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if !(u > -epsilon && u < epsilon) {
        return Err(Error::InvalidInput(format!(
            "u = {u} outside the overlap (-{epsilon}, {epsilon})"
        )));
    }
    Ok(blend_weight_unchecked(u, epsilon))
}

pub(crate) fn blend_weight_unchecked(u: f64, epsilon: f64) -> f64 {
    (1.0 - (PI * (-u + epsilon) / (2.0 * epsilon)).cos()) / 2.0
}
