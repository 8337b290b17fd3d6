//! Forward projects a smooth ball and reconstructs it with FDK.

use cbct_bhc::metrics::nrmsd;
use cbct_bhc::projector::{fdk_reconstruct, forward_project, FilterSpec, RampKind};
use cbct_bhc::{ScanGeometry, Volume, VolumeGrid};

fn main() -> cbct_bhc::Result<()> {
    let g = ScanGeometry::desk();
    let grid = VolumeGrid::centered(128, 128, 9, 0.5);
    let ball = Volume::from_fn(grid, |x, y, z| {
        let r = ((x - 3.0).powi(2) + (y - 2.0).powi(2) + z * z).sqrt();
        if r < 20.0 {
            0.5 * (1.0 + (std::f64::consts::PI * r / 20.0).cos())
        } else {
            0.0
        }
    });
    let sino = forward_project(&ball, &g)?;
    let mask = grid.cylinder_mask(0.8 * g.roi_radius());
    for kind in [RampKind::RamLak, RampKind::Cosine] {
        let filter = FilterSpec {
            kind,
            ..FilterSpec::default()
        };
        let recon = fdk_reconstruct(&sino, &filter, &grid)?;
        println!(
            "{kind:?}: NRMSD {:.2}% inside 80% of the ROI",
            nrmsd(&recon, &ball, Some(&mask))?
        );
    }
    Ok(())
}
