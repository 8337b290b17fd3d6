//! Data-consistency-driven sinogram correction.

mod corrector;
mod fit;
pub mod nelder_mead;
mod transform;

pub use corrector::{corrector_apply, h_eval, h_slope, CorrectorParams};
pub use fit::{fit_params, FitOptions, FitReport};
pub use transform::{
    auto_threshold, consistency_cost, consistency_transform, resolve_line, ConsistencyConfig,
    ConsistencyLine, ConsistencyOperator, MidPlane,
};
