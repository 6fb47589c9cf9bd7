//! `nakamoto-econ-cli` — majority-attack economics from a TOML scenario.
//!
//! Verbs:
//! - `validate`   parse + validate the scenario, echo the resolved config
//! - `equilibrium` solve the benchmark only (equilibrium.csv)
//! - `attack`     one attack evaluation: the first point of every sweep axis
//! - `sweep`      the full Cartesian sweep (results.csv)
//! - `pos`        the stake-lottery analogue (pos.csv); needs a `[pos]` table
//!
//! Every verb writes `scenario_echo.toml` (the fully resolved scenario,
//! reloadable) and `report.txt` into `--out`. Exit codes: 0 success,
//! 2 invalid input or mathematical domain error, 3 solver failure,
//! 4 simulation budget exhausted.

mod report;
mod runner;
mod scenario;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nakamoto_econ::EconError;

use crate::runner::{run_pos, run_rows, solve_benchmark, Bench};
use crate::scenario::{Mode, Scenario};

/// A failure with the process exit code it should map to.
#[derive(Debug, Clone)]
pub struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    pub fn new(code: u8, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }

    /// Bad input: unusable scenario file, out-of-range field, bad flag.
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::new(2, msg)
    }

    /// Map an engine error onto the exit-code contract, keeping context.
    pub fn from_econ(context: &str, e: &EconError) -> Self {
        let code = exit_code_for(e);
        Self::new(code, format!("{context}: {e}"))
    }

    #[must_use]
    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

fn exit_code_for(e: &EconError) -> u8 {
    match e {
        EconError::Domain(_) => 2,
        EconError::NoEquilibrium(_) | EconError::NonConvergence(_) | EconError::NoRoot(_) => 3,
        EconError::BudgetExceeded { .. } => 4,
        EconError::Replication { source, .. } => exit_code_for(source),
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.msg)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(1, format!("io error: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "nakamoto-econ-cli",
    version,
    about = "Majority-attack economics: free-entry benchmark, attack costs, \
             fork-race Monte Carlo, stake-lottery analogue"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Parse and validate the scenario, then echo the resolved configuration.
    Validate(CommonArgs),
    /// Solve the free-entry benchmark and write per-miner allocations.
    Equilibrium(CommonArgs),
    /// Evaluate a single attack: the first element of every sweep axis.
    Attack(CommonArgs),
    /// Evaluate the full Cartesian sweep over the attack axes.
    Sweep(CommonArgs),
    /// Run the stake-lottery analogue (requires a [pos] table).
    Pos(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,

    /// Output directory (created if missing). Defaults to the scenario's
    /// [run] out_dir.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override [run] replications.
    #[arg(long)]
    reps: Option<u32>,

    /// Override [run] seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override [run] mode (analytic | simulate | cross).
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "analytic" => Ok(Mode::Analytic),
        "simulate" => Ok(Mode::Simulate),
        "cross" => Ok(Mode::Cross),
        other => Err(format!("unknown mode `{other}` (expected analytic|simulate|cross)")),
    }
}

fn load_scenario(args: &CommonArgs) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(&args.scenario)?;
    if let Some(r) = args.reps {
        s.run.replications = r;
    }
    if let Some(seed) = args.seed {
        s.run.seed = seed;
    }
    if let Some(mode) = args.mode {
        s.run.mode = mode;
    }
    if let Some(out) = &args.out {
        s.run.out_dir = out.display().to_string();
    }
    s.validate()?;
    Ok(s)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Echo + report are written by every verb so a run is always reproducible
/// from its output directory alone.
fn finish(
    s: &Scenario,
    bench: Option<&Bench>,
    rows: Option<&[runner::ResultRow]>,
    pos: Option<&runner::PosRow>,
) -> Result<(), CliError> {
    let dir = PathBuf::from(&s.run.out_dir);
    write_out(&dir, "scenario_echo.toml", &s.echo()?)?;
    if let Some(b) = bench {
        write_out(&dir, "equilibrium.csv", &report::equilibrium_csv(&b.equilibrium))?;
    }
    if let Some(rows) = rows {
        write_out(&dir, "results.csv", &report::results_csv(rows))?;
    }
    if let Some(p) = pos {
        write_out(&dir, "pos.csv", &report::pos_csv(p))?;
    }
    let text = report::report_text(s, bench.map(|b| &b.equilibrium), rows, pos);
    write_out(&dir, "report.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.verb {
        Verb::Validate(args) => {
            let s = load_scenario(&args)?;
            let dir = PathBuf::from(&s.run.out_dir);
            write_out(&dir, "scenario_echo.toml", &s.echo()?)?;
            println!("scenario ok: {}", args.scenario.display());
            Ok(())
        }
        Verb::Equilibrium(args) => {
            let s = load_scenario(&args)?;
            let bench = solve_benchmark(&s)?;
            finish(&s, Some(&bench), None, None)
        }
        Verb::Attack(args) => {
            // One evaluation: keep only the head of every sweep axis. The
            // surviving point keeps grid index 0, so its row is bit-identical
            // to the first row of the full sweep under the same seed.
            let mut s = load_scenario(&args)?;
            let mut a = s.attack_or_default();
            a.alpha.truncate(1);
            a.kappa.truncate(1);
            a.deployed.truncate(1);
            a.rented.truncate(1);
            a.retarget_blocks.truncate(1);
            a.lengths.truncate(1);
            s.attack = Some(a);
            let bench = solve_benchmark(&s)?;
            let rows = run_rows(&s, &bench)?;
            finish(&s, Some(&bench), Some(&rows), None)
        }
        Verb::Sweep(args) => {
            let s = load_scenario(&args)?;
            let bench = solve_benchmark(&s)?;
            let rows = run_rows(&s, &bench)?;
            finish(&s, Some(&bench), Some(&rows), None)
        }
        Verb::Pos(args) => {
            let s = load_scenario(&args)?;
            let pos = run_pos(&s)?;
            finish(&s, None, None, Some(&pos))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
