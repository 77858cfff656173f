use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chromaffect::{Bandwidth, PipelineError, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chromaffect", version, about = "Color, harmony and emotion analytics over an image corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a directory of images and write the report bundle.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input_dir: Option<PathBuf>,
    /// Emotion sidecar CSV. Without it only the color reports are written.
    #[arg(long)]
    emotions: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Bin count for all three channel histograms.
    #[arg(long)]
    bins: Option<usize>,
    /// `auto` or a fixed bandwidth as a fraction of the channel domain.
    #[arg(long)]
    bandwidth: Option<Bandwidth>,
    #[arg(long)]
    color_presence_threshold: Option<f64>,
    #[arg(long)]
    emotion_threshold: Option<f64>,
    #[arg(long)]
    min_support: Option<f64>,
    #[arg(long)]
    min_confidence: Option<f64>,
    #[arg(long)]
    min_lift: Option<f64>,
    #[arg(long)]
    max_pixels: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// TOML file using the same keys as the flags (snake_case). Flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_config(path: &Path) -> Result<RunConfig, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn build_config(args: AnalyzeArgs) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => { $(if let Some(v) = args.$field { cfg.$field = v; })* };
    }
    apply!(
        input_dir,
        output_dir,
        bandwidth,
        color_presence_threshold,
        emotion_threshold,
        min_support,
        min_confidence,
        min_lift,
        max_pixels,
        workers
    );
    if args.emotions.is_some() {
        cfg.emotions = args.emotions;
    }
    if let Some(n) = args.bins {
        cfg.hue_bins = n;
        cfg.sl_bins = n;
    }
    Ok(cfg)
}

fn analyze(args: AnalyzeArgs) -> Result<(), PipelineError> {
    let cfg = build_config(args)?;
    let report = chromaffect::run(&cfg)?;
    log::info!(
        "{} of {} files analyzed, {} skipped; reports in {}",
        report.decoded(),
        report.discovered,
        report.skipped.len(),
        cfg.output_dir.display()
    );
    if let Some(f) = &report.fusion {
        log::info!("{} images joined, {} rules kept", f.join.matched, f.rules.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
