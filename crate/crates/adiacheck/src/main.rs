use std::path::PathBuf;
use std::process::ExitCode;

use adiacheck::commands::{cmd_analyze, cmd_exact, cmd_sweep, cmd_verify, Fault, EXIT_ERROR};
use adiacheck::config::{ModelKind, RunConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Checks whether a time-dependent Hamiltonian with degenerate levels
/// follows the degenerate adiabatic approximation.
#[derive(Parser, Debug)]
#[command(name = "adiacheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the necessary and sufficient conditions; exit 0 (both pass),
    /// 2 (sufficient fails), 3 (necessary fails) or 1 (error).
    Analyze(RunArgs),
    /// Compare propagation of the gamma model with its closed-form solution.
    Exact(RunArgs),
    /// Evaluate the conditions over a grid of w/b and theta values.
    Sweep(RunArgs),
    /// Run the oracle and invariant checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    null_cutoff: Option<f64>,
    /// Time step of the propagation grid.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Omit the timestamp line from CSV files and the field from JSON.
    #[arg(long)]
    no_timestamp: bool,
    /// Worker threads for sweeps.
    #[arg(long, env = "ADIACHECK_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    /// JSON schedule of Hamiltonian samples; selects the sampled model.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Comma-separated w/b values for sweeps.
    #[arg(long, value_delimiter = ',')]
    w_over_b: Option<Vec<f64>>,
    /// Comma-separated theta values for sweeps.
    #[arg(long = "thetas", value_delimiter = ',')]
    thetas: Option<Vec<f64>>,
    /// Skip propagation in sweeps.
    #[arg(long)]
    no_propagate: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Spacing of the oracle grids.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    GammaYSign,
}

impl RunArgs {
    fn resolve(self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.out {
            c.output.dir = v;
        }
        if let Some(v) = self.eta {
            c.conditions.eta = v;
        }
        if let Some(v) = self.null_cutoff {
            c.conditions.null_cutoff = v;
        }
        if let Some(v) = self.dt {
            c.grid.dt = Some(v);
        }
        if let Some(v) = self.t_end {
            c.grid.t_end = Some(v);
        }
        if self.no_timestamp {
            c.output.timestamp = false;
        }
        if let Some(v) = self.threads {
            c.threads = Some(v);
        }
        if let Some(v) = self.b {
            c.model.b = v;
        }
        if let Some(v) = self.w {
            c.model.w = v;
        }
        if let Some(v) = self.theta {
            c.model.theta = v;
        }
        if let Some(v) = self.hbar {
            c.model.hbar = v;
        }
        if let Some(v) = self.schedule {
            c.model.kind = ModelKind::Schedule;
            c.model.schedule = Some(v);
        }
        if let Some(v) = self.w_over_b {
            c.sweep.w_over_b = v;
        }
        if let Some(v) = self.thetas {
            c.sweep.theta = v;
        }
        if self.no_propagate {
            c.sweep.propagate = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(&a.resolve()?),
        Command::Exact(a) => cmd_exact(&a.resolve()?),
        Command::Sweep(a) => cmd_sweep(&a.resolve()?),
        Command::Verify(v) => cmd_verify(
            v.dt,
            v.inject_fault.map(|f| match f {
                FaultArg::GammaYSign => Fault::GammaYSign,
            }),
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
