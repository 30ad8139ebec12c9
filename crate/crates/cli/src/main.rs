//! `omcrep`: reproducible runner for the optomechanical quantum-repeater
//! simulation.
//!
//! Exit codes: 0 success, 1 runtime error, 2 validation error (bad flags or
//! config), 3 verification failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use omcrep::commands::{self, FigureId};
use omcrep::config::{self, ConfigError, OutputFormat, Overrides, RunSpec};
use omcrep::trace::{self, TraceFile};

#[derive(Parser)]
#[command(
    name = "omcrep",
    version,
    about = "Optomechanical quantum-repeater simulation runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Config file (key = value TOML; see the README for the schema)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path: a file for stage1/protocol, a directory for
    /// sweep/figure (defaults: stdout / current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Number of grid points for the time grids
    #[arg(long)]
    grid_points: Option<usize>,
    /// Stage-1 handoff time (lambda1*t)
    #[arg(long)]
    t: Option<f64>,
    /// Mechanical frequency over lambda1
    #[arg(long)]
    omega_m: Option<f64>,
    /// Optomechanical coupling over lambda1
    #[arg(long)]
    g: Option<f64>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunSpec, ConfigError> {
        let overrides = Overrides {
            omega_m: self.omega_m,
            g: self.g,
            t: self.t,
            grid_points: self.grid_points,
            out: self.out.clone(),
            format: self.format.map(Into::into),
        };
        config::resolve(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evolve stage 1 and emit entropy, success probability and amplitudes
    Stage1(CommonArgs),
    /// Run the full protocol at the handoff time and emit all branch traces
    Protocol(CommonArgs),
    /// Run the protocol once per sweep value (sweep set in the config file)
    Sweep(CommonArgs),
    /// Emit the data set behind one preset figure family
    Figure {
        #[arg(value_enum)]
        fig: FigureId,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the verification suite and emit a machine-readable report
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Fault-injection hook: corrupt one generator entry first
        #[arg(long, hide = true)]
        corrupt_s: bool,
    },
}

#[derive(Debug, thiserror::Error)]
enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] omcrep_core::Error),
    #[error(transparent)]
    Trace(#[from] trace::TraceError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl AppError {
    fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Config(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

fn write_single(
    file: &TraceFile,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<(), AppError> {
    match out {
        Some(path) => {
            file.write_to_path(path, format)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match format {
                OutputFormat::Csv => file.write_csv(&mut lock)?,
                OutputFormat::Json => file.write_json(&mut lock)?,
            }
        }
    }
    Ok(())
}

fn write_set(
    files: &[(String, TraceFile)],
    out_dir: Option<&Path>,
    format: OutputFormat,
) -> Result<(), AppError> {
    let dir = out_dir.unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    for (name, file) in files {
        let path = dir.join(name);
        file.write_to_path(&path, format)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, AppError> {
    match cli.command {
        Command::Stage1(common) => {
            let spec = common.resolve()?;
            let file = commands::cmd_stage1(&spec)?;
            write_single(&file, spec.out.as_deref(), spec.format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Protocol(common) => {
            let spec = common.resolve()?;
            let file = commands::cmd_protocol(&spec)?;
            write_single(&file, spec.out.as_deref(), spec.format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(common) => {
            let spec = common.resolve()?;
            let (vary, values) = spec.sweep.clone().ok_or(ConfigError::Field {
                field: "sweep_parameter",
                message: "the sweep command needs sweep_parameter/sweep_values in the config"
                    .to_string(),
            })?;
            let files = commands::cmd_sweep(&spec, vary, &values)?;
            write_set(&files, spec.out.as_deref(), spec.format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Figure { fig, common } => {
            let overrides = Overrides {
                omega_m: common.omega_m,
                g: common.g,
                t: common.t,
                grid_points: common.grid_points,
                out: common.out.clone(),
                format: common.format.map(Into::into),
            };
            let spec = config::resolve_without_params(common.config.as_deref(), &overrides)?;
            let files = commands::cmd_figure(&spec, fig)?;
            write_set(&files, spec.out.as_deref(), spec.format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { common, corrupt_s } => {
            let spec = common.resolve()?;
            let report = commands::cmd_verify(&spec, corrupt_s)?;
            let json = serde_json::to_string_pretty(&report)?;
            match spec.out.as_deref() {
                Some(path) => {
                    std::fs::File::create(path)?.write_all(json.as_bytes())?;
                    eprintln!("wrote {}", path.display());
                }
                None => println!("{json}"),
            }
            for c in &report.checks {
                eprintln!(
                    "{} {}: residual {:e} (tolerance {:e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.residual,
                    c.tolerance
                );
            }
            if report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
