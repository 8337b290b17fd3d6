//! Rasterizes a bundled phantom and projects it polychromatically and at
//! the reference energy, then cuts the offset detector and adds noise.
//!
//! cargo run --release --example simulate_scan -- model2

use cbct_bhc::simulate::{
    add_noise, bundled, project_pair, rasterize_phantom, EnergySpectrum, MaterialTable, NoiseConfig,
};
use cbct_bhc::{subsample_offset, ScanGeometry};

fn main() -> cbct_bhc::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "model1".into());
    let mut spec = bundled::by_name(&name).expect("bundled phantom: metal_free, model1 or model2");
    spec.grid.nz = 1;
    let g = ScanGeometry {
        n_v: 1,
        ..ScanGeometry::desk()
    };

    let spectrum = EnergySpectrum::bundled_w90_cu05();
    let table = MaterialTable::standard(&spectrum.energies)?;
    let e_star = spectrum.mean_energy();
    let labels = rasterize_phantom(&spec)?;
    let (poly, mono) = project_pair(&labels, &table, &spectrum, e_star, &g, 20.0)?;
    let offset = subsample_offset(&poly, &g)?;
    let noisy = add_noise(&offset, &NoiseConfig::low(), 1)?;

    let max = |s: &cbct_bhc::Sinogram| s.data.iter().copied().fold(0.0, f64::max);
    println!(
        "{name}: {} views x {} samples, E* = {e_star:.1} keV",
        g.n_views, poly.grid.n_u
    );
    println!(
        "max line integral: polychromatic {:.3}, monochromatic {:.3}",
        max(&poly),
        max(&mono)
    );
    let measured = offset.measured.iter().filter(|&&m| m).count();
    println!("offset detector keeps {measured} of {} columns", g.n_u);
    let diff: f64 = noisy
        .data
        .iter()
        .zip(offset.data.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    println!(
        "low-dose noise rms {:.4}",
        (diff / (measured * g.n_views) as f64).sqrt()
    );
    Ok(())
}
