use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swarmloc::config::{self, SweepSpec};
use swarmloc::engine::{run_mission, run_mission_traced};
use swarmloc::error::{ConfigError, EngineError, HarnessError};
use swarmloc::harness::{emit_outputs, run_sweep};

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURES: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "swarmloc",
    version,
    about = "Multi-UAV gas source seek-and-localise simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single mission and print its record as JSON.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-step trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep and write CSV summaries.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Check a config file and print the resolved settings.
    ValidateConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: Option<&Path>) -> Result<SweepSpec, ConfigError> {
    match path {
        Some(p) => config::load_config(p),
        None => Ok(SweepSpec::default()),
    }
}

fn config_failure(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn io_failure(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_IO)
}

fn simulate(config: Option<&Path>, seed: Option<u64>, trace: Option<&Path>) -> ExitCode {
    let mut cfg = match load(config) {
        Ok(spec) => spec.base,
        Err(ConfigError::Io(e)) => return io_failure(e),
        Err(e) => return config_failure(e),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Err(e) = cfg.validate() {
        return config_failure(e);
    }
    let result = match trace {
        Some(path) => match File::create(path) {
            Ok(f) => run_mission_traced(&cfg, BufWriter::new(f)),
            Err(e) => return io_failure(e),
        },
        None => run_mission(&cfg),
    };
    match result {
        Ok(record) => {
            println!("{}", serde_json::to_string_pretty(&record).expect("record serialises"));
            ExitCode::SUCCESS
        }
        Err(EngineError::Trace(e)) => io_failure(e),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn sweep(config: Option<&Path>, out: &Path, jobs: usize) -> ExitCode {
    let spec = match load(config) {
        Ok(spec) => spec,
        Err(ConfigError::Io(e)) => return io_failure(e),
        Err(e) => return config_failure(e),
    };
    let result = match run_sweep(&spec, jobs) {
        Ok(r) => r,
        Err(e @ HarnessError::InvalidSweep(_)) => return config_failure(e),
        Err(e) => return io_failure(e),
    };
    if let Err(e) = emit_outputs(&result, &spec, out) {
        return io_failure(e);
    }
    let failures = result.failures();
    eprintln!(
        "{} runs, {} failed, outputs in {}",
        result.records.len(),
        failures,
        out.display()
    );
    if failures > 0 {
        ExitCode::from(EXIT_FAILURES)
    } else {
        ExitCode::SUCCESS
    }
}

fn validate(config: Option<&Path>) -> ExitCode {
    let spec = match load(config) {
        Ok(spec) => spec,
        Err(ConfigError::Io(e)) => return io_failure(e),
        Err(e) => return config_failure(e),
    };
    if let Err(e) = spec.base.validate().and_then(|_| spec.validate()) {
        return config_failure(e);
    }
    println!("{}", serde_json::to_string_pretty(&spec).expect("spec serialises"));
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, seed, trace } => simulate(config.as_deref(), seed, trace.as_deref()),
        Command::Sweep { config, out, jobs } => sweep(config.as_deref(), &out, jobs),
        Command::ValidateConfig { config } => validate(config.as_deref()),
    }
}
