use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use specmap_cli::{
    parse_domain, parse_engine, parse_grid, parse_target_arg, run_classify, run_periods, run_synth, run_theta, run_validate, run_verify,
    split_tol_args, CliError, Options, Outcome,
};

/// Harmonic maps from spectral data.
///
/// Tolerances are overridden with `--tol.<name> <value>`
/// (curve, period, lattice, theta_zero, form, frame, proj).
#[derive(Parser)]
#[command(name = "specmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the curve, real structure and line-bundle data.
    Validate(Common),
    /// Period matrix and augmented period rows.
    Periods(Common),
    /// Theta characteristics of the map: τ, κ, offsets, flow.
    Theta(Common),
    /// Synthesize the map on the configured grid and write CSV + JSON.
    Synth(Common),
    /// Run the structural and numerical checks.
    Verify(Common),
    /// Algebraic type and period lattice.
    Classify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration (g0, w3, pu2, delaunay, g2_flow).
    #[arg(long)]
    fixture: Option<String>,
    /// NX,NY
    #[arg(long)]
    grid: Option<String>,
    /// x0,x1,y0,y1
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// exact | theta | both
    #[arg(long)]
    engine: Option<String>,
    /// grassmannian | projective_unitary
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mesh JSON whose config hash must match (verify).
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

impl Common {
    fn options(self, tol: Vec<(String, f64)>) -> Result<Options, CliError> {
        Ok(Options {
            config: self.config,
            fixture: self.fixture,
            grid: self.grid.as_deref().map(parse_grid).transpose()?,
            domain: self.domain.as_deref().map(parse_domain).transpose()?,
            engine: self.engine.as_deref().map(parse_engine).transpose()?,
            target: self.target.as_deref().map(parse_target_arg).transpose()?,
            out: self.out,
            tol,
            mesh: self.mesh,
            inject_fault: self.inject_fault,
        })
    }
}

fn run() -> Result<Outcome, CliError> {
    let (args, tol) = split_tol_args(std::env::args().collect())?;
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| {
        let code = if e.use_stderr() { 2 } else { 0 };
        let _ = e.print();
        std::process::exit(code);
    });
    match cli.command {
        Command::Validate(c) => run_validate(&c.options(tol)?),
        Command::Periods(c) => run_periods(&c.options(tol)?),
        Command::Theta(c) => run_theta(&c.options(tol)?),
        Command::Synth(c) => run_synth(&c.options(tol)?),
        Command::Verify(c) => run_verify(&c.options(tol)?),
        Command::Classify(c) => run_classify(&c.options(tol)?),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.report).expect("report serializes"));
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("specmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
