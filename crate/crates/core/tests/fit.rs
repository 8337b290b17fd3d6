mod common;

use cbct_bhc::dcc::{fit_params, ConsistencyConfig, FitOptions, FitReport};
use cbct_bhc::simulate::bundled;
use cbct_bhc::Sinogram;
use common::*;

fn fit(sino: &Sinogram) -> FitReport {
    fit_params(sino, &ConsistencyConfig::default(), &FitOptions::default()).unwrap()
}

/// Largest relative deviation of the fitted corrector from the identity
/// over the values present in `sino`.
fn identity_deviation(report: &FitReport, sino: &Sinogram) -> f64 {
    let mut worst: f64 = 0.0;
    for &p in sino.data.iter().filter(|&&p| p > 1e-3) {
        let f = report.params.apply(p).unwrap();
        worst = worst.max((f - p).abs() / p);
    }
    worst
}

#[test]
fn consistent_metal_free_data_fits_near_identity() {
    let g = mid_plane_geometry();
    let (_, mono) = rasterized_pair(bundled::metal_free(), &g);
    let filled = offset_filled(&mono, &g);
    let report = fit(&filled);
    let dev = identity_deviation(&report, &filled);
    assert!(report.monotone);
    assert!(dev < 0.02, "max |f(p) - p| / p = {dev}");
}

#[test]
fn beam_hardened_model1_cost_drops_fivefold() {
    let g = mid_plane_geometry();
    let (poly, _) = rasterized_pair(bundled::model1(), &g);
    let report = fit(&offset_filled(&poly, &g));
    assert!(report.monotone);
    assert!(report.final_cost <= 0.2 * report.initial_cost, "{report:?}");
    let (lo, hi) = report.params.gain_range(report.max_value, 200).unwrap();
    assert!(lo > 1.0 - 1e-4 && hi > 1.0, "gain range ({lo}, {hi})");
}

#[test]
fn fit_is_deterministic() {
    let g = mid_plane_geometry();
    let (poly, _) = rasterized_pair(bundled::model1(), &g);
    let filled = offset_filled(&poly, &g);
    assert_eq!(fit(&filled), fit(&filled));
}
