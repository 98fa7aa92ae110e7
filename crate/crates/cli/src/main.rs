use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use curvecast::analysis::{parse_group_keys, AnalysisError};
use curvecast::config::{Config, Preset};
use curvecast::experiment::{self, ExperimentError};
use curvecast_cli::exit;
use curvecast_cli::report::{self, Report, ReportError};
use curvecast_cli::serve;

#[derive(Parser)]
#[command(name = "curvecast", version, about = "Ray-cast pointing simulator for curved displays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment plan and write one CSV row per trial.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        participants: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a report from a trial CSV.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: Report,
        /// Comma-separated grouping keys: participant, technique, distance,
        /// offset, amplitude, width, id.
        #[arg(long, default_value = "")]
        group: String,
        /// Report CSV path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only the geometry section is used.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve the live-steering protocol over TCP on localhost.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self { code: exit::USAGE, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Self { code: exit::RUNTIME, message: message.to_string() }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    match path {
        Some(p) => Config::load(p).map_err(Failure::usage),
        None => Ok(Config::default()),
    }
}

fn simulate(
    config: Option<&Path>,
    preset: Option<Preset>,
    seed: Option<u64>,
    participants: Option<u32>,
    out: &Path,
) -> Result<(), Failure> {
    let mut config = load_config(config)?;
    if preset.is_some() {
        config.preset = preset;
    }
    if seed.is_some() {
        config.master_seed = seed;
    }
    if participants.is_some() {
        config.virtual_participants = participants;
    }
    let plan = config.plan().map_err(Failure::usage)?;
    let t0 = Instant::now();
    let records = experiment::run(&plan).map_err(|e| match e {
        ExperimentError::InvalidPlan(_) | ExperimentError::Infeasible(_) => Failure::usage(e),
        _ => Failure::runtime(e),
    })?;
    experiment::write_csv(&records, out).map_err(Failure::runtime)?;
    println!("{} trials written to {} in {:.2?}", records.len(), out.display(), t0.elapsed());
    Ok(())
}

fn analyze(input: &Path, which: Report, group: &str, out: Option<&Path>, config: Option<&Path>) -> Result<(), Failure> {
    let geom = load_config(config)?.geometry.unwrap_or_default();
    let keys = parse_group_keys(group).map_err(Failure::usage)?;
    let records = experiment::read_csv(input).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
    let result = match out {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))?;
            report::write(which, &records, &keys, &geom, BufWriter::new(file))
        }
        None => report::write(which, &records, &keys, &geom, io::stdout().lock()),
    };
    let warnings = result.map_err(|e| match e {
        ReportError::Usage(_) | ReportError::Analysis(AnalysisError::UnknownKey(_)) => Failure::usage(e),
        _ => Failure::runtime(e),
    })?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(())
}

fn serve(port: u16, config: Option<&Path>) -> Result<(), Failure> {
    let config = load_config(config)?;
    let listener = serve::bind(port).map_err(|e| Failure::usage(format!("cannot listen on port {port}: {e}")))?;
    let addr = listener.local_addr().map_err(Failure::runtime)?;
    println!("listening on {addr}");
    io::stdout().flush().map_err(Failure::runtime)?;
    serve::run(listener, config).map_err(Failure::runtime)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, preset, seed, participants, out } => {
            simulate(config.as_deref(), *preset, *seed, *participants, out)
        }
        Command::Analyze { input, report, group, out, config } => {
            analyze(input, *report, group, out.as_deref(), config.as_deref())
        }
        Command::Serve { port, config } => serve(*port, config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
