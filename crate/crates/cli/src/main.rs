use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use sod_core::pipeline::{evaluate, run_pipeline, PipelineConfig, RunOverrides};
use sod_core::synthgen::{write_sequence, Generator, Scenario};

/// Static object detection in numbered frame sequences.
#[derive(Parser, Debug)]
#[command(name = "sod", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the detector over a frame sequence.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write mask_NNNN.png for every frame.
        #[arg(long)]
        emit_masks: bool,
        /// Write overlay_NNNN.png with the hull drawn in green.
        #[arg(long)]
        emit_overlays: bool,
        /// Use frame 1's threshold for the whole run.
        #[arg(long)]
        freeze_threshold: bool,
    },
    /// Render a synthetic sequence with ground-truth masks.
    Gen {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted masks against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// IoU counted as a hit for the latency and hit-rate figures.
        #[arg(long, default_value_t = 0.7)]
        iou_threshold: f64,
        /// Include per-frame scores in the output.
        #[arg(long)]
        per_frame: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            emit_masks,
            emit_overlays,
            freeze_threshold,
        } => {
            let mut cfg = PipelineConfig::load(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            RunOverrides {
                emit_masks,
                emit_overlays,
                freeze_threshold,
            }
            .apply(&mut cfg);
            let report = run_pipeline(&cfg).context("pipeline failed")?;
            println!(
                "{} frames, {} with a detection, output in {}",
                report.frames.len(),
                report.detections(),
                cfg.output.dir.display()
            );
        }
        Command::Gen { scenario, out } => {
            let text = std::fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let scenario = Scenario::from_toml(&text)
                .with_context(|| format!("parsing {}", scenario.display()))?;
            let generator = Generator::new(scenario)?;
            let manifest = write_sequence(&generator, &out)
                .with_context(|| format!("writing to {}", out.display()))?;
            info!("wrote {} frames", manifest.frames.len());
            println!("{} frames written to {}", manifest.frames.len(), out.display());
        }
        Command::Eval {
            pred,
            truth,
            iou_threshold,
            per_frame,
        } => {
            let mut summary = evaluate(&pred, &truth, iou_threshold).context("evaluation failed")?;
            if !per_frame {
                summary.per_frame.clear();
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
