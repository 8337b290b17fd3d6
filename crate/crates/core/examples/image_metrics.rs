//! NRMSD and SSIM of a degraded image against its reference.

use cbct_bhc::metrics::{crop_to_radius, nrmsd, ssim_volume};
use cbct_bhc::{Volume, VolumeGrid};

type Degrade = fn(f64, f64) -> f64;

fn main() -> cbct_bhc::Result<()> {
    let grid = VolumeGrid::centered(128, 128, 1, 0.5);
    let truth = |x: f64, y: f64| if x.hypot(y) < 20.0 { 1.0 } else { 0.2 };
    let reference = Volume::from_fn(grid, |x, y, _| truth(x, y));
    let mask = grid.cylinder_mask(30.0);
    println!("{:<22} {:>8} {:>8}", "degradation", "NRMSD %", "SSIM");
    let degraded: [(&str, Degrade); 3] = [
        ("scaled by 1.05", |v, _| 1.05 * v),
        ("offset by 0.05", |v, _| v + 0.05),
        ("striped +-0.05", |v, x| v + 0.05 * (x * 2.0).sin().signum()),
    ];
    for (label, f) in degraded {
        let image = Volume::from_fn(grid, |x, y, _| f(truth(x, y), x));
        let e = nrmsd(&image, &reference, Some(&mask))?;
        let s = ssim_volume(
            &crop_to_radius(&image, 21.0),
            &crop_to_radius(&reference, 21.0),
        )?;
        println!("{label:<22} {e:8.2} {s:8.4}");
    }
    Ok(())
}
