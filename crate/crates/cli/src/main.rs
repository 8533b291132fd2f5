use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod inputs;

/// Evaluate functionals on finite spaces, compute their rate functions and
/// conjugates, check their axioms, and run binomial large-deviation experiments.
#[derive(Debug, Parser)]
#[command(name = "vflab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct PitArgs {
    /// Pit depths: `default` or a comma-separated increasing list.
    #[arg(long, default_value = "default")]
    schedule: String,
    /// Deepest pit as a power of two; depths double from 1 up to it.
    #[arg(long, value_name = "K")]
    cmax: Option<u32>,
    /// Stall tolerance of the pit iteration.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct AscentArgs {
    /// Stationarity tolerance of the ascent.
    #[arg(long)]
    tol: Option<f64>,
    /// Use closed-form gradients where available (finite differences otherwise).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    exact_gradient: bool,
}

#[derive(Debug, Args)]
struct SequenceArgs {
    /// Success probability of the Bernoulli steps.
    #[arg(long, required_unless_present = "measure", conflicts_with = "measure")]
    p: Option<f64>,
    /// Comma-separated sample sizes, or `default`.
    #[arg(long, default_value = "default")]
    schedule: String,
    /// Read a measure sequence (JSON, or CSV with n,point,weight) instead.
    #[arg(long, value_name = "PATH", value_parser = existing_file)]
    measure: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a functional at a function.
    Eval {
        #[arg(long, value_parser = existing_file)]
        functional: PathBuf,
        #[arg(long = "f", value_name = "PATH", value_parser = existing_file)]
        f: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Rate function of a functional by deepening pits.
    Dual {
        #[arg(long, value_parser = existing_file)]
        functional: PathBuf,
        #[command(flatten)]
        pit: PitArgs,
        #[command(flatten)]
        out: Output,
    },
    /// `L0 + max(F − I)` from a rate file.
    Reconstruct {
        #[arg(long, value_parser = existing_file)]
        rate: PathBuf,
        #[arg(long = "f", value_name = "PATH", value_parser = existing_file)]
        f: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Difference between a functional and its reconstruction from the dual rate.
    Gap {
        #[arg(long, value_parser = existing_file)]
        functional: PathBuf,
        #[arg(long = "f", value_name = "PATH", value_parser = existing_file)]
        f: PathBuf,
        #[command(flatten)]
        pit: PitArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Measure-level conjugate `J(μ) = sup_F ⟨μ, F⟩ − L(F)`.
    Conjugate {
        #[arg(long, value_parser = existing_file)]
        functional: PathBuf,
        #[arg(long, value_parser = existing_file)]
        measure: PathBuf,
        #[command(flatten)]
        ascent: AscentArgs,
        #[command(flatten)]
        out: Output,
    },
    /// `L0 + sup_μ ⟨μ, F⟩ − J(μ)` for a rate on measures.
    Recover {
        #[arg(long, value_parser = existing_file)]
        rate: PathBuf,
        #[arg(long = "f", value_name = "PATH", value_parser = existing_file)]
        f: PathBuf,
        #[command(flatten)]
        ascent: AscentArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Randomized check of one property.
    Check {
        #[arg(long, value_parser = existing_file)]
        functional: PathBuf,
        /// monotone, monotone_lattice, translation, maximal, lipschitz,
        /// convex, sigma_continuity or const_preserving_translation.
        #[arg(long)]
        property: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// For sigma_continuity: a `{"terms": [...]}` sequence file.
        #[arg(long = "f", value_name = "PATH", value_parser = existing_file)]
        f: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Per-n values and extrapolated limit of the scaled log-integral.
    Cramer {
        #[command(flatten)]
        seq: SequenceArgs,
        #[arg(long = "f", value_name = "PATH", value_parser = existing_file)]
        f: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Diameters of the empirical sublevel sets `{I_n ≤ a}`.
    Tightness {
        #[command(flatten)]
        seq: SequenceArgs,
        #[arg(long)]
        a: f64,
        #[command(flatten)]
        out: Output,
    },
}

fn existing_file(s: &str) -> Result<PathBuf, String> {
    let p = Path::new(s);
    if p.is_file() {
        Ok(p.to_path_buf())
    } else {
        Err(format!("no such file: {s}"))
    }
}

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violations,
    NotConverged,
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("VF_LOG"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            let first = first.trim_start_matches("error: ");
            eprintln!("{}", error_line("UsageError", &format!("{first} (see --help)")));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violations) => ExitCode::from(1),
        Ok(Status::NotConverged) => ExitCode::from(3),
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("{}", error_line(e.kind(), &message));
            ExitCode::from(2)
        }
    }
}
