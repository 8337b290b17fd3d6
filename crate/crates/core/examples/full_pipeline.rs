//! Simulates one run on disk, reconstructs it without correction, with the
//! metal-trace baseline and with stage 1, then writes the report.
//!
//! cargo run --release --example full_pipeline -- runs/example

use std::path::PathBuf;

use cbct_bhc::pipeline::{
    run_baseline_li, run_reconstruct, run_report, run_simulate, run_stage1, run_stage2,
    ExperimentConfig, NoiseLevel, NoiseSetting, ReportOptions, RunPaths,
};

fn main() -> cbct_bhc::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "runs/example".into()),
    );
    let mut cfg = ExperimentConfig::new("example");
    cfg.noise = NoiseSetting::Level(NoiseLevel::Low);
    cfg.seed = 1;
    cfg.output_dir = Some(dir.clone());
    let r = cfg.resolve(std::path::Path::new("."))?;
    let paths = RunPaths::new(&dir);

    run_simulate(&r)?;
    run_reconstruct(&r, &paths.sinogram(), &paths.method_dir("uncorrected"))?;
    run_baseline_li(
        &r,
        &paths.sinogram(),
        &paths.method_dir("baseline_li"),
        r.config.baseline.threshold,
    )?;
    let fit = run_stage1(&r, &paths.sinogram(), &paths.method_dir("stage1"))?;
    println!(
        "stage 1 cost {:.3e} -> {:.3e}",
        fit.initial_cost, fit.final_cost
    );
    if let Err(e) = run_stage2(&paths.volume("stage1"), &paths.method_dir("stage2"), None) {
        println!("{e} (exit status {})", e.exit_code());
    }
    let report = run_report(&dir, &dir.join("report"), &ReportOptions::default())?;
    print!("{}", report.table());
    Ok(())
}
