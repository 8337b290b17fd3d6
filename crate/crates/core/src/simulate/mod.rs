//! Polychromatic, noisy, offset-truncated acquisitions of material phantoms.

mod analytic;
pub mod bundled;
pub mod materials;
mod noise;
pub mod phantom;
mod project;
pub mod spectrum;

pub use analytic::{analytic_pair, analytic_polychromatic, analytic_reference, disc_line_integral};
pub use materials::{MaterialTable, MAX_MATERIALS};
pub use noise::{add_noise, NoiseConfig};
pub use phantom::{rasterize_phantom, PhantomSpec, Primitive, Shape};
pub use project::{polychromatic_project, project_pair, reference_sinogram, DEFAULT_MAX_LOG};
pub use spectrum::EnergySpectrum;
