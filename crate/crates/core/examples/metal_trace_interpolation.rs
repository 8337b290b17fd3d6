//! Linear interpolation across the metal trace, the comparison method.

use cbct_bhc::baseline::interpolate_metal_trace;
use cbct_bhc::metrics::roi_scores;
use cbct_bhc::projector::{extrapolate_truncation, fdk_reconstruct, ExtrapolationSpec, FilterSpec};
use cbct_bhc::reflect::reflect_fill;
use cbct_bhc::simulate::{bundled, project_pair, rasterize_phantom, EnergySpectrum, MaterialTable};
use cbct_bhc::{subsample_offset, ScanGeometry, Sinogram, VolumeGrid};

fn main() -> cbct_bhc::Result<()> {
    let threshold: f64 = std::env::args()
        .nth(1)
        .map_or(5.5, |s| s.parse().expect("threshold"));
    let g = ScanGeometry {
        n_v: 1,
        ..ScanGeometry::desk()
    };
    let spectrum = EnergySpectrum::bundled_w90_cu05();
    let table = MaterialTable::standard(&spectrum.energies)?;
    let mut spec = bundled::model1();
    spec.grid.nz = 1;
    let labels = rasterize_phantom(&spec)?;
    let (poly, mono) = project_pair(&labels, &table, &spectrum, spectrum.mean_energy(), &g, 20.0)?;

    let grid = VolumeGrid::centered(256, 256, 1, 0.5);
    let recon = |offset: &Sinogram| -> cbct_bhc::Result<_> {
        let filled = reflect_fill(offset, &g)?;
        fdk_reconstruct(
            &extrapolate_truncation(&filled, &ExtrapolationSpec::default())?,
            &FilterSpec::default(),
            &grid,
        )
    };
    let offset = subsample_offset(&poly, &g)?;
    let (interpolated, report) = interpolate_metal_trace(&offset, threshold)?;
    println!(
        "{} samples above {threshold} replaced",
        report.trace_samples
    );

    let reference = recon(&subsample_offset(&mono, &g)?)?;
    for (label, sino) in [("uncorrected", &offset), ("interpolated", &interpolated)] {
        let s = roi_scores(&recon(sino)?, &reference, g.roi_radius())?;
        println!("{label:<12} NRMSD {:.2}%  SSIM {:.4}", s.nrmsd, s.ssim);
    }
    Ok(())
}
