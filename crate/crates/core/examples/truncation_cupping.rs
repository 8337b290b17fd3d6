//! Reconstructs a water disc wider than the field of view with and without
//! lateral extrapolation of the truncated projections.

use cbct_bhc::projector::{extrapolate_truncation, fdk_reconstruct, ExtrapolationSpec, FilterSpec};
use cbct_bhc::reflect::reflect_fill;
use cbct_bhc::simulate::materials::WATER;
use cbct_bhc::simulate::{
    analytic_reference, bundled, EnergySpectrum, MaterialTable, PhantomSpec, Primitive, Shape,
};
use cbct_bhc::{subsample_offset, ScanGeometry, Volume, VolumeGrid};

fn profile(v: &Volume, radius: f64) -> Vec<f64> {
    let slice = v.slice_z(0);
    let j = v.grid.ny / 2;
    (0..v.grid.nx)
        .filter(|&i| v.grid.x(i) >= 0.0 && v.grid.x(i) <= radius)
        .step_by(10)
        .map(|i| slice[[j, i]])
        .collect()
}

fn main() -> cbct_bhc::Result<()> {
    let g = ScanGeometry {
        n_v: 1,
        ..ScanGeometry::desk()
    };
    let spectrum = EnergySpectrum::bundled_w90_cu05();
    let table = MaterialTable::standard(&spectrum.energies)?;
    let e_star = spectrum.mean_energy();
    let spec = PhantomSpec {
        name: "wide disc".into(),
        grid: bundled::phantom_grid(),
        support_radius: None,
        primitives: vec![Primitive {
            shape: Shape::Cylinder {
                center: [0.0, 0.0],
                semi_axes: [60.0, 60.0],
                angle_deg: 0.0,
                z_range: [-20.0, 20.0],
            },
            material: WATER,
        }],
    };
    let full = analytic_reference(&spec, &table, e_star, &g)?;
    let filled = reflect_fill(&subsample_offset(&full, &g)?, &g)?;
    let grid = VolumeGrid::centered(256, 256, 1, 0.5);
    let filter = FilterSpec::default();
    let plain = fdk_reconstruct(&filled, &filter, &grid)?;
    let extended = fdk_reconstruct(
        &extrapolate_truncation(&filled, &ExtrapolationSpec::default())?,
        &filter,
        &grid,
    )?;

    println!(
        "true value {:.5} /mm; profile from the center outward every 5 mm",
        table.mu_at(WATER as usize, e_star)?
    );
    let fmt = |p: Vec<f64>| {
        p.iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("zero pad     {}", fmt(profile(&plain, g.roi_radius())));
    println!("extrapolated {}", fmt(profile(&extended, g.roi_radius())));
    Ok(())
}
