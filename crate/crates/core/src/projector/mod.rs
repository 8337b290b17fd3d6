//! Monochromatic cone-beam projection and FDK reconstruction.

mod extrapolate;
mod fdk;
mod filter;
mod forward;
pub(crate) mod joseph;

pub use extrapolate::{extrapolate_truncation, ExtrapolationMethod, ExtrapolationSpec};
pub use fdk::{backproject, fan_beam_fbp, fdk_reconstruct, filter_sinogram};
pub use filter::{ramp_tap, FilterSpec, RampFilter, RampKind};
pub use forward::forward_project;
pub(crate) use forward::{check_volume, for_each_ray_multi};
