//! Zero-order consistency transform and cost of a beam-hardened sinogram
//! against its monochromatic counterpart.

use cbct_bhc::dcc::{
    consistency_cost, consistency_transform, resolve_line, ConsistencyConfig, MidPlane,
};
use cbct_bhc::reflect::reflect_fill;
use cbct_bhc::simulate::{bundled, project_pair, rasterize_phantom, EnergySpectrum, MaterialTable};
use cbct_bhc::{subsample_offset, ScanGeometry};

fn main() -> cbct_bhc::Result<()> {
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
    let filled = |s| reflect_fill(&subsample_offset(s, &g)?, &g);
    let mid_poly = MidPlane::from_sinogram(&filled(&poly)?);
    let mid_mono = MidPlane::from_sinogram(&filled(&mono)?);

    let cfg = ConsistencyConfig::default();
    let line = resolve_line(&mid_poly, &cfg)?;
    println!(
        "line y0 = {:.2} mm, x in [{:.1}, {:.1}]",
        line.y0,
        line.xs[0],
        line.xs[line.xs.len() - 1]
    );
    let t_poly = consistency_transform(&mid_poly, 0, &line, &cfg)?;
    let t_mono = consistency_transform(&mid_mono, 0, &line, &cfg)?;
    println!("{:>8} {:>12} {:>12}", "x", "T0 poly", "T0 mono");
    for i in (0..line.xs.len()).step_by(8) {
        println!("{:8.2} {:12.4} {:12.4}", line.xs[i], t_poly[i], t_mono[i]);
    }
    let hard = consistency_cost(None, &mid_poly, &line, &cfg)?;
    let soft = consistency_cost(None, &mid_mono, &line, &cfg)?;
    println!(
        "cost: beam-hardened {hard:.3e}, monochromatic {soft:.3e}, ratio {:.0}",
        hard / soft
    );
    Ok(())
}
