use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbct_bhc::pipeline::{
    self, DenoiserConfig, ExperimentConfig, NoiseLevel, NoiseSetting, ReportOptions, Resolved,
    RunPaths,
};
use cbct_bhc::{Error, Result};

/// Offset-detector CBCT simulation and beam-hardening correction.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the offset-detector scan and the monochromatic reference.
    Simulate {
        #[command(flatten)]
        exp: ExpArgs,
        /// Noise level: none, low or high.
        #[arg(long)]
        noise: Option<String>,
        /// Bundled phantom name or phantom JSON path.
        #[arg(long)]
        phantom: Option<String>,
    },
    /// Plain reconstruction: reflection fill, extrapolation, FDK.
    Reconstruct {
        #[command(flatten)]
        exp: ExpArgs,
        #[command(flatten)]
        io: StageIo,
    },
    /// Consistency-fitted beam-hardening correction, then reconstruction.
    Stage1 {
        #[command(flatten)]
        exp: ExpArgs,
        #[command(flatten)]
        io: StageIo,
        /// Corrector threshold; chosen from the data when absent.
        #[arg(long)]
        threshold: Option<f64>,
        /// Detector row to fit on; the mid-plane when absent.
        #[arg(long)]
        row: Option<usize>,
    },
    /// Metal-trace linear interpolation, then reconstruction.
    BaselineLi {
        #[command(flatten)]
        exp: ExpArgs,
        #[command(flatten)]
        io: StageIo,
        /// Sinogram value above which a sample is metal trace.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run the external slice denoiser on the stage-1 volume.
    Stage2 {
        #[command(flatten)]
        exp: ExpArgs,
        #[command(flatten)]
        io: StageIo,
        /// Denoiser command; receives the input and output raw paths.
        #[arg(long, num_args = 1.., allow_hyphen_values = true)]
        denoiser: Option<Vec<String>>,
    },
    /// Metrics table and slice panels over finished runs.
    Report {
        /// A run directory or a directory of runs.
        dir: PathBuf,
        /// Output directory; `<dir>/report` when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Display window center (HU).
        #[arg(long, default_value_t = 500.0)]
        window_center: f64,
        /// Display window width (HU).
        #[arg(long, default_value_t = 5000.0)]
        window_width: f64,
        #[arg(long)]
        slice: Option<usize>,
        #[arg(long)]
        no_png: bool,
    },
}

#[derive(Args)]
struct ExpArgs {
    /// Experiment JSON; built-in defaults when absent.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Run directory, overriding the configured one.
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct StageIo {
    /// Input file; the run's standard input for this stage when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory; `<run>/<stage>` when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load(
    exp: &ExpArgs,
    tweak: impl FnOnce(&mut ExperimentConfig) -> Result<()>,
) -> Result<Resolved> {
    let (mut cfg, base) = match &exp.config {
        Some(path) => (
            pipeline::read_json::<ExperimentConfig>(path)?,
            path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        ),
        None => (ExperimentConfig::new("default"), PathBuf::from(".")),
    };
    if let Some(seed) = exp.seed {
        cfg.seed = seed;
    }
    tweak(&mut cfg)?;
    let mut r = cfg.resolve(&base)?;
    if let Some(run) = &exp.run {
        r.output_dir = run.clone();
    }
    Ok(r)
}

fn stage_paths(
    r: &Resolved,
    io: &StageIo,
    input: impl FnOnce(&RunPaths) -> PathBuf,
    stage: &str,
) -> (PathBuf, PathBuf) {
    let run = RunPaths::new(&r.output_dir);
    (
        io.input.clone().unwrap_or_else(|| input(&run)),
        io.output.clone().unwrap_or_else(|| run.method_dir(stage)),
    )
}

fn run(cli: Cli) -> Result<()> {
    let threads = pipeline::init_threads()?;
    log::debug!("{threads} worker threads");
    match cli.command {
        Cmd::Simulate {
            exp,
            noise,
            phantom,
        } => {
            let r = load(&exp, |cfg| {
                if let Some(n) = noise {
                    let level: NoiseLevel = serde_json::from_value(serde_json::Value::String(
                        n.clone(),
                    ))
                    .map_err(|_| {
                        Error::Config(format!("unknown noise level `{n}`; use none, low or high"))
                    })?;
                    cfg.noise = NoiseSetting::Level(level);
                }
                if let Some(p) = phantom {
                    cfg.phantom = pipeline::Source::Named(p);
                }
                Ok(())
            })?;
            let m = pipeline::run_simulate(&r)?;
            println!("{}", r.output_dir.display());
            if m.clamped_rays > 0 {
                eprintln!("warning: {} rays clamped", m.clamped_rays);
            }
        }
        Cmd::Reconstruct { exp, io } => {
            let r = load(&exp, |_| Ok(()))?;
            let (input, output) = stage_paths(&r, &io, RunPaths::sinogram, "uncorrected");
            pipeline::run_reconstruct(&r, &input, &output)?;
            println!("{}", output.join("volume.raw").display());
        }
        Cmd::Stage1 {
            exp,
            io,
            threshold,
            row,
        } => {
            let r = load(&exp, |cfg| {
                if threshold.is_some() || row.is_some() {
                    if let pipeline::Source::Inline(dcc) = &mut cfg.dcc {
                        dcc.threshold = threshold.or(dcc.threshold);
                    } else if threshold.is_some() {
                        return Err(Error::Config(
                            "--threshold needs an inline dcc config or none at all".into(),
                        ));
                    }
                    cfg.fit.row = row.or(cfg.fit.row);
                }
                Ok(())
            })?;
            let (input, output) = stage_paths(&r, &io, RunPaths::sinogram, "stage1");
            let report = pipeline::run_stage1(&r, &input, &output)?;
            println!(
                "cost {:.4e} -> {:.4e}; lambda = ({:.5}, {:.5}, {:.5}, {:.5}), threshold {:.4}",
                report.initial_cost,
                report.final_cost,
                report.params.lambda0,
                report.params.lambda1,
                report.params.lambda2,
                report.params.lambda3,
                report.params.threshold
            );
        }
        Cmd::BaselineLi { exp, io, threshold } => {
            let r = load(&exp, |_| Ok(()))?;
            let (input, output) = stage_paths(&r, &io, RunPaths::sinogram, "baseline_li");
            let t = threshold.unwrap_or(r.config.baseline.threshold);
            let rep = pipeline::run_baseline_li(&r, &input, &output, t)?;
            println!(
                "{} trace samples, {} rows skipped",
                rep.trace_samples, rep.skipped_rows
            );
        }
        Cmd::Stage2 { exp, io, denoiser } => {
            let r = load(&exp, |_| Ok(()))?;
            let (input, output) = stage_paths(&r, &io, |p| p.volume("stage1"), "stage2");
            let cfg = denoiser
                .map(|command| DenoiserConfig { command })
                .or(r.config.denoiser.clone());
            pipeline::run_stage2(&input, &output, cfg.as_ref())?;
            println!("{}", output.join("volume.raw").display());
        }
        Cmd::Report {
            dir,
            out,
            window_center,
            window_width,
            slice,
            no_png,
        } => {
            let opts = ReportOptions {
                window_center,
                window_width,
                slice,
                write_png: !no_png,
            };
            let out = out.unwrap_or_else(|| dir.join("report"));
            let report = pipeline::run_report(&dir, &out, &opts)?;
            print!("{}", report.table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
