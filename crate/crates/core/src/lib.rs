//! Offset-detector dental CBCT simulation and consistency-driven
//! beam-hardening correction.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod dcc;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod projector;
pub mod reflect;
pub mod simulate;
pub mod sinogram;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::{blend_weight, conjugate_angle, DetectorGrid, ScanGeometry};
pub use sinogram::{subsample_offset, Sinogram};
pub use volume::{LabelVolume, Volume, VolumeGrid};
