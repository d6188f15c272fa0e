use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use siegel_theta::orders_exact::FiberTarget;
use siegel_theta::theta_num::{DEFAULT_EPS, DEFAULT_RADIUS_CAP};
use siegel_theta::verify::{self, IndexSet, Report, RunConfig, VerifyError};
use siegel_theta::Exec;

/// Theta-constant quotients on the Siegel upper half-space.
#[derive(Parser, Debug)]
#[command(name = "siegel", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, global = true, default_value_t = 2)]
    genus: usize,
    #[arg(long, global = true, default_value_t = 5)]
    level: u64,
    #[arg(long, global = true, env = "SIEGEL_EPS", default_value_t = DEFAULT_EPS)]
    eps: f64,
    #[arg(long, global = true, default_value_t = 8)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 20)]
    trials: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long = "radius-cap", global = true, default_value_t = DEFAULT_RADIUS_CAP)]
    radius_cap: f64,
    /// Group table cache file.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Also write the JSON output to this file.
    #[arg(long = "json-out", global = true)]
    json_out: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Include wall-clock timing in the output.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// θ_v(Z) for a characteristic v.
    Theta {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// JSON array of rows, entries as "a+bi".
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Θ_v(Z), the level taken from the exact denominator of v.
    Btheta {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Run one identity suite.
    Verify {
        #[arg(value_parser = verify::SUITES)]
        suite: String,
    },
    /// Exhaustive separation of I_N/± by signatures and sampling.
    Primitivity,
    /// Scan I_N/± for classes matching a generator.
    Fibers {
        /// e_j, e or f.
        #[arg(long)]
        target: FiberTarget,
    },
    /// Stabilizer of a generating index set in GSp_2g(Z/N)/±.
    Stabilizer {
        #[arg(long, default_value = "full")]
        set: IndexSet,
    },
    /// Invariance of Θ_v(NZ) under N-scaled unipotent words.
    Rescale,
    /// The level-2 quotient, evaluated past the guard.
    Degenerate,
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig {
            genus: self.genus,
            level: self.level,
            eps: self.eps,
            samples: self.samples,
            trials: self.trials,
            seed: self.seed,
            radius_cap: self.radius_cap,
            cache_path: self.cache.clone(),
            exec: if self.sequential { Exec::Sequential } else { Exec::default() },
        }
    }
}

enum Output {
    Value(Value),
    Report(Report),
}

fn run(cli: &Cli) -> Result<Output, VerifyError> {
    let cfg = cli.common.config();
    Ok(match &cli.command {
        Command::Theta { v, z } => Output::Value(verify::cmd_theta(v, z, &cfg)?),
        Command::Btheta { v, z } => Output::Value(verify::cmd_btheta(v, z, &cfg)?),
        Command::Verify { suite } => Output::Report(verify::cmd_verify(suite, &cfg)?),
        Command::Primitivity => Output::Report(verify::cmd_primitivity(&cfg)?),
        Command::Fibers { target } => Output::Report(verify::cmd_fibers(&cfg, *target)?),
        Command::Stabilizer { set } => Output::Report(verify::cmd_stabilizer(&cfg, *set)?),
        Command::Rescale => Output::Report(verify::cmd_rescale_check(&cfg)?),
        Command::Degenerate => Output::Report(verify::degenerate_level_two(&cfg)?),
    })
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), VerifyError> {
    println!("{text}");
    if let Some(p) = path {
        std::fs::write(p, format!("{text}\n"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        let (text, code) = match out {
            Output::Value(v) => (serde_json::to_string_pretty(&v)?, 0),
            Output::Report(r) => {
                let text = if cli.common.timing { r.to_json_with_timing()? } else { r.to_json()? };
                (text, r.exit_code())
            }
        };
        emit(&text, cli.common.json_out.as_ref())?;
        Ok(code)
    });
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            let err = serde_json::json!({ "error": e.to_string() });
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}
