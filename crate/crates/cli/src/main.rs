mod config;
mod stages;

use clap::{Parser, Subcommand};
use config::{ExtractionArgs, FileConfig, Settings};
use stages::OutputFormat;
use std::path::PathBuf;

/// Enhances OpenStreetMap road extracts into lane-level vector maps using
/// width knowledge from road design manuals.
#[derive(Parser)]
#[command(name = "sdpp", version, about)]
struct Cli {
    /// Optional TOML config file; command-line flags win over file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Keep only road ways (and the nodes they use) from an OSM XML extract.
    Filter {
        /// OSM XML input.
        input: PathBuf,
        /// Filtered OSM XML output.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Normalize road ways into self-contained segment records.
    Normalize {
        /// Filtered OSM XML input.
        input: PathBuf,
        /// segments.json output.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Extract per-segment width specs through the configured backend.
    Extract {
        /// segments.json input.
        input: PathBuf,
        /// specs.json output.
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        extraction: ExtractionArgs,
    },
    /// Generate lane geometry from segments and specs.
    Generate {
        /// segments.json input.
        segments: PathBuf,
        /// specs.json input.
        specs: PathBuf,
        /// enhanced.json output.
        #[arg(short, long)]
        output: PathBuf,
        /// Projection origin "lat,lon" (default: map centroid).
        #[arg(long)]
        origin: Option<String>,
    },
    /// Export an enhanced map as a GeoJSON FeatureCollection.
    Export {
        /// enhanced.json input.
        input: PathBuf,
        /// GeoJSON output.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate an enhanced map against ground-truth lanes.
    Eval {
        /// enhanced.json input.
        enhanced: PathBuf,
        /// Ground-truth lane file (JSON, way id -> lane polylines).
        ground_truth: PathBuf,
        /// Correctness threshold on the Chamfer distance, meters.
        #[arg(long)]
        threshold: Option<f64>,
        /// Resampling step for Chamfer computation, meters.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
        /// Also write the full report as JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the whole pipeline: filter, normalize, extract, generate, export.
    Run {
        /// OSM XML input.
        input: PathBuf,
        /// Output directory for the five artifacts.
        out_dir: PathBuf,
        #[command(flatten)]
        extraction: ExtractionArgs,
        /// Projection origin "lat,lon" (default: map centroid).
        #[arg(long)]
        origin: Option<String>,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or usage; exits 2.
    Config(String),
    /// Runtime failure; exits 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(()) => 0,
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(CliError::Config(message)) => {
            eprintln!("config error: {message}");
            2
        }
    });
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    if let Some(jobs) = cli.jobs.or(file.jobs) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))?;
    }
    match cli.command {
        Command::Filter { input, output } => stages::cmd_filter(&input, &output),
        Command::Normalize { input, output } => stages::cmd_normalize(&input, &output),
        Command::Extract {
            input,
            output,
            extraction,
        } => {
            let settings = Settings::resolve(&extraction, &file)?;
            stages::cmd_extract(&input, &output, &settings)
        }
        Command::Generate {
            segments,
            specs,
            output,
            origin,
        } => {
            let origin = origin.or_else(|| file.origin.clone());
            stages::cmd_generate(&segments, &specs, &output, origin.as_deref())
        }
        Command::Export { input, output } => stages::cmd_export(&input, &output),
        Command::Eval {
            enhanced,
            ground_truth,
            threshold,
            step,
            format,
            output,
        } => {
            let threshold = threshold
                .or(file.threshold)
                .unwrap_or(config::DEFAULT_THRESHOLD_M);
            let step = step.or(file.step).unwrap_or(config::DEFAULT_STEP_M);
            stages::cmd_eval(
                &enhanced,
                &ground_truth,
                threshold,
                step,
                format,
                output.as_deref(),
            )
            .map(|_| ())
        }
        Command::Run {
            input,
            out_dir,
            extraction,
            origin,
        } => {
            let settings = Settings::resolve(&extraction, &file)?;
            let origin = origin.or_else(|| file.origin.clone());
            stages::cmd_run(&input, &out_dir, &settings, origin.as_deref())
        }
    }
}
