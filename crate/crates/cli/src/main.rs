mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Input that parsed but does not make sense, or a file that failed to parse.
#[derive(Debug)]
pub struct ValidationError(pub String);

/// A numeric check that ran and did not pass.
#[derive(Debug)]
pub struct NumericFailure(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for NumericFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}
impl std::error::Error for NumericFailure {}

pub const EXIT_IO: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;
pub const EXIT_NUMERIC: u8 = 5;

#[derive(Parser)]
#[command(
    name = "pptk",
    version,
    about = "Detector kit: architecture budgets, reference forward, augmentation, post-processing, schedules and COCO evaluation"
)]
struct Cli {
    /// Seed for every random draw (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON file with option defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter and FLOPs budget of a model variant.
    Analyze(commands::AnalyzeArgs),
    /// Reference forward pass of a variant on one image.
    Forward(commands::ForwardArgs),
    /// Run the augmentation pipeline on one annotated image.
    Augment(commands::AugmentArgs),
    /// Decode head tensors, fuse scores and apply NMS.
    Postprocess(commands::PostprocessArgs),
    /// Learning rate at an iteration, or a CSV of the schedule.
    Schedule(commands::ScheduleArgs),
    /// COCO box mAP of a results file.
    Eval(commands::EvalArgs),
    /// Finite-difference checks of the loss and activation gradients.
    Losscheck(commands::LosscheckArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<NumericFailure>() {
            return EXIT_NUMERIC;
        }
        if cause.is::<ValidationError>() || cause.is::<serde_json::Error>() {
            return EXIT_VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<pptk::Error>() {
            return match e {
                pptk::Error::Io(_) => EXIT_IO,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    1
}

fn init_threads() -> anyhow::Result<Option<usize>> {
    let Ok(raw) = std::env::var("PPTK_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ValidationError(format!("PPTK_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(Some(n))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = init_threads()?;
    let file = cli.config.as_deref().map(config::load_file).transpose()?;
    let seed = cli
        .seed
        .or_else(|| file.as_ref().and_then(|f| f.get("seed")).and_then(|v| v.as_u64()))
        .unwrap_or(0);
    let ctx = commands::Ctx { seed, file, threads };
    match cli.command {
        Command::Analyze(a) => commands::analyze(&ctx, &a),
        Command::Forward(a) => commands::forward(&ctx, &a),
        Command::Augment(a) => commands::augment(&ctx, &a),
        Command::Postprocess(a) => commands::postprocess(&ctx, &a),
        Command::Schedule(a) => commands::schedule(&ctx, &a),
        Command::Eval(a) => commands::eval(&ctx, &a),
        Command::Losscheck(a) => commands::losscheck(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
