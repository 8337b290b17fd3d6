//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cbct_bhc::dcc::{
    consistency_cost, consistency_transform, h_eval, h_slope, resolve_line, ConsistencyConfig,
    CorrectorParams, MidPlane,
};
use cbct_bhc::metrics::nrmsd;
use cbct_bhc::pipeline::{
    run_reconstruct, run_report, run_simulate, run_stage1, run_stage2, NoiseLevel, NoiseSetting,
    Report, ReportOptions, RunPaths,
};
use cbct_bhc::projector::{
    extrapolate_truncation, fan_beam_fbp, fdk_reconstruct, forward_project, ExtrapolationSpec,
    FilterSpec,
};
use cbct_bhc::simulate::materials::WATER;
use cbct_bhc::simulate::{analytic_reference, NoiseConfig};
use cbct_bhc::{ScanGeometry, VolumeGrid};
use common::*;

type Check = Result<String, String>;

fn check(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reflection() -> Check {
    let err = short_arm_error(&mid_plane_geometry(), DISC_CENTER, DISC_RADIUS);
    check(
        err < 0.01,
        format!("short-arm max error {:.3}% of peak", 100.0 * err),
    )
}

fn polynomiality() -> Check {
    let g = mid_plane_geometry();
    let cfg = ConsistencyConfig::default();
    let (poly, mono) = rasterized_pair(disc_pair_spec(), &g);
    let mid_m = MidPlane::from_sinogram(&offset_filled(&mono, &g));
    let mid_p = MidPlane::from_sinogram(&offset_filled(&poly, &g));
    let line = resolve_line(&mid_p, &cfg).map_err(|e| e.to_string())?;
    let t0 = consistency_transform(&mid_m, 0, &line, &cfg).map_err(|e| e.to_string())?;
    let mean = t0.iter().sum::<f64>() / t0.len() as f64;
    let spread = t0.iter().map(|t| (t - mean).abs()).fold(0.0, f64::max) / mean.abs();
    let t1 = consistency_transform(&mid_m, 1, &line, &cfg).map_err(|e| e.to_string())?;
    let residual = affine_residual(&line.xs, &t1) / range(&t1);
    let hard = consistency_cost(None, &mid_p, &line, &cfg).map_err(|e| e.to_string())?;
    let soft = consistency_cost(None, &mid_m, &line, &cfg).map_err(|e| e.to_string())?;
    let ratio = hard / soft;
    check(
        spread < 0.02 && residual < 0.02 && ratio >= 10.0,
        format!(
            "T0 spread {:.2}%, T1 affine residual {:.2}% of range, cost ratio {ratio:.0}",
            100.0 * spread,
            100.0 * residual
        ),
    )
}

fn corrector_identities() -> Check {
    let mut worst_value: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let lambda0 = 0.05 + 0.2 * i as f64;
            let threshold = 0.5 + 0.5 * j as f64;
            let h = h_eval(threshold, lambda0, threshold).map_err(|e| e.to_string())?;
            let d = h_slope(threshold, lambda0, threshold).map_err(|e| e.to_string())?;
            worst_value = worst_value.max((h - threshold).abs());
            worst_slope = worst_slope.max((d - 1.0).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut jump: f64 = 0.0;
    for _ in 0..1000 {
        let p = CorrectorParams {
            lambda0: rng.random_range(0.05..2.0),
            lambda1: rng.random_range(-0.1..0.1),
            lambda2: rng.random_range(-0.1..0.1),
            lambda3: rng.random_range(-0.1..0.1),
            threshold: rng.random_range(0.5..5.0),
        };
        let t = p.threshold;
        let below = p.apply(t * (1.0 - 1e-12)).map_err(|e| e.to_string())?;
        let above = p.apply(t * (1.0 + 1e-12)).map_err(|e| e.to_string())?;
        jump = jump.max((above - below).abs() / t);
    }
    check(
        worst_value <= 1e-10 && worst_slope <= 1e-10 && jump < 1e-9,
        format!("|h(L) - L| {worst_value:.1e}, |h'(L) - 1| {worst_slope:.1e}, relative jump at L {jump:.1e}"),
    )
}

fn fdk() -> Check {
    let g = ScanGeometry::desk();
    let filter = FilterSpec::default();
    let e = |e: cbct_bhc::Error| e.to_string();

    let grid = VolumeGrid::centered(96, 96, 9, 0.5);
    let sino = forward_project(&smooth_ball(grid, [4.0, -3.0, 0.0], 18.0), &g).map_err(e)?;
    let plane = VolumeGrid::centered(96, 96, 1, 0.5);
    let volume = fdk_reconstruct(&sino, &filter, &plane).map_err(e)?;
    let k = sino.grid.center_row().ok_or("no center row")?;
    let fbp = fan_beam_fbp(sino.row_slice(k), &g, &sino.grid, &filter, &plane).map_err(e)?;
    let diff = volume
        .slice_z(0)
        .iter()
        .zip(fbp.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let grid = VolumeGrid::centered(128, 128, 9, 0.5);
    let ball = smooth_ball(grid, [3.0, 2.0, 0.0], 20.0);
    let recon =
        fdk_reconstruct(&forward_project(&ball, &g).map_err(e)?, &filter, &grid).map_err(e)?;
    let round_trip = nrmsd(
        &recon,
        &ball,
        Some(&grid.cylinder_mask(0.8 * g.roi_radius())),
    )
    .map_err(e)?;

    let g1 = mid_plane_geometry();
    let s = spectral();
    let mu = s.table.mu_at(WATER as usize, s.e_star).map_err(e)?;
    let full = analytic_reference(&disc_spec([0.0, 0.0], 60.0, WATER), &s.table, s.e_star, &g1)
        .map_err(e)?;
    let filled = offset_filled(&full, &g1);
    let grid = VolumeGrid::centered(256, 256, 1, 0.5);
    let plain = fdk_reconstruct(&filled, &filter, &grid).map_err(e)?;
    let padded = extrapolate_truncation(&filled, &ExtrapolationSpec::default()).map_err(e)?;
    let extrapolated = fdk_reconstruct(&padded, &filter, &grid).map_err(e)?;
    let before = cupping(&plain, g1.roi_radius(), mu);
    let after = cupping(&extrapolated, g1.roi_radius(), mu);
    let reduction = 1.0 - after / before;

    check(
        diff <= 1e-9 && round_trip < 10.0 && reduction >= 0.5,
        format!(
            "mid-plane vs fan-beam {diff:.1e}, ball round trip {round_trip:.2}% NRMSD, cupping reduced {:.0}%",
            100.0 * reduction
        ),
    )
}

/// Simulates a desk-scale run and reconstructs it without and with stage 1.
fn full_run(dir: &Path, phantom: &str, noise: NoiseSetting) -> Result<(), String> {
    let r = experiment(dir, phantom, noise, ScanGeometry::desk().n_v);
    let paths = RunPaths::new(dir);
    let e = |e: cbct_bhc::Error| e.to_string();
    run_simulate(&r).map_err(e)?;
    run_reconstruct(&r, &paths.sinogram(), &paths.method_dir("uncorrected")).map_err(e)?;
    run_stage1(&r, &paths.sinogram(), &paths.method_dir("stage1")).map_err(e)?;
    Ok(())
}

fn stage1_trend(report: &Report) -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for run in ["model1-low", "model2-low"] {
        let (Some(u), Some(s)) = (report.get(run, "uncorrected"), report.get(run, "stage1")) else {
            return Err(format!("{run} missing from the report"));
        };
        ok &= s.nrmsd < u.nrmsd && s.ssim >= u.ssim;
        parts.push(format!(
            "{run}: NRMSD {:.2} -> {:.2}, SSIM {:.4} -> {:.4}",
            u.nrmsd, s.nrmsd, u.ssim, s.ssim
        ));
    }
    check(ok, parts.join("; "))
}

fn amplification(report: &Report) -> Check {
    let run = "model1-extreme";
    let (Some(u), Some(s)) = (report.get(run, "uncorrected"), report.get(run, "stage1")) else {
        return Err(format!("{run} missing from the report"));
    };
    let recorded = report.amplified.iter().any(|a| a == run);
    check(
        s.nrmsd > u.nrmsd && recorded,
        format!(
            "{run}: NRMSD {:.2} -> {:.2}, flagged in the report: {recorded}",
            u.nrmsd, s.nrmsd
        ),
    )
}

fn files_below(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = entry.path();
        if p.is_dir() {
            out.extend(files_below(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn determinism(first: &Path, tmp: &Path) -> Check {
    let second = tmp.join("again/model1-low");
    full_run(&second, "model1", NoiseSetting::Level(NoiseLevel::Low))?;
    let opts = ReportOptions::default();
    for run in [first, second.as_path()] {
        run_report(run, &run.join("report"), &opts).map_err(|e| e.to_string())?;
    }
    let (a, b) = (files_below(first), files_below(&second));
    if a.len() != b.len() {
        return Err(format!("{} files vs {}", a.len(), b.len()));
    }
    for (pa, pb) in a.iter().zip(&b) {
        if std::fs::read(pa).ok() != std::fs::read(pb).ok() {
            return Err(format!(
                "{} differs",
                pa.strip_prefix(first).unwrap_or(pa).display()
            ));
        }
    }
    check(
        true,
        format!("{} files byte-identical, metrics.json included", a.len()),
    )
}

fn stage2_unavailable(stage1: &Path, tmp: &Path) -> Check {
    match run_stage2(stage1, &tmp.join("stage2"), None) {
        Err(e) if e.exit_code() == 4 => Ok(format!("exit status 4: {e}")),
        Err(e) => Err(format!("exit status {}: {e}", e.exit_code())),
        Ok(_) => Err("stage 2 ran without a denoiser".into()),
    }
}

fn main() {
    let _ = cbct_bhc::pipeline::init_threads();
    let tmp = tempfile::tempdir().expect("temporary directory");
    let runs = tmp.path().join("runs");
    let low = NoiseSetting::Level(NoiseLevel::Low);
    let extreme = NoiseSetting::Custom(NoiseConfig {
        i0: 1e3,
        sigma: 5.0,
    });
    let simulated = [
        ("model1-low", "model1", low),
        ("model2-low", "model2", low),
        ("model1-extreme", "model1", extreme),
    ]
    .iter()
    .try_for_each(|(name, phantom, noise)| full_run(&runs.join(name), phantom, *noise));
    let report = simulated.and_then(|_| {
        let opts = ReportOptions {
            write_png: false,
            ..Default::default()
        };
        run_report(&runs, &tmp.path().join("report"), &opts).map_err(|e| e.to_string())
    });
    let from_report = |f: fn(&Report) -> Check| report.as_ref().map_err(Clone::clone).and_then(f);
    let model1 = runs.join("model1-low");

    let results = [
        ("conjugate-ray reflection", reflection()),
        ("consistency polynomiality", polynomiality()),
        ("corrector identities", corrector_identities()),
        (
            "stage-1 artifact reduction (low noise)",
            from_report(stage1_trend),
        ),
        (
            "noise amplification recorded (high noise)",
            from_report(amplification),
        ),
        ("FDK correctness", fdk()),
        ("determinism", determinism(&model1, tmp.path())),
        (
            "stage 2 unavailable",
            stage2_unavailable(&RunPaths::new(&model1).volume("stage1"), tmp.path()),
        ),
    ];
    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
}
