//! `sigmak`: verification suites and radial solves with JSON ledgers and CSV tables.

mod commands;
mod config;
mod ledger;

use clap::{Parser, Subcommand};
use config::{ExperimentConfig, Overrides};
use ledger::{RunLedger, Status};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "sigmak", version, about = "Checks and solvers for the sigma_k Yamabe problem with boundary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Discretization size of the command: chart resolution, quadrature nodes or solver nodes.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Pass tolerance of the command's main checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Symmetric-function identities, structure conditions and boundary-term checks.
    Identities,
    /// Curvature pack and boundary identities of the configured chart.
    Curvature,
    /// Boundary Gauss-Bonnet functional and its conformal drift.
    Gaussbonnet,
    /// First-variation formulas by central differences.
    Variation,
    /// Newton and continuation solves of the radial problem.
    Solve,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::Curvature => "curvature",
            Command::Gaussbonnet => "gaussbonnet",
            Command::Variation => "variation",
            Command::Solve => "solve",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let mut cfg = match ExperimentConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    cfg.apply(name, Overrides { seed: cli.seed, grid: cli.grid, tol: cli.tol });
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("cannot create {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    let echo = serde_json::to_value(&cfg).expect("config serializes");
    let mut ledger = RunLedger::new(name, echo);
    let clock = Instant::now();
    let run = match cli.command {
        Command::Identities => commands::identities(&cfg, &mut ledger, &cli.out),
        Command::Curvature => commands::curvature(&cfg, &mut ledger, &cli.out),
        Command::Gaussbonnet => commands::gaussbonnet(&cfg, &mut ledger, &cli.out),
        Command::Variation => commands::variation(&cfg, &mut ledger, &cli.out),
        Command::Solve => commands::solve(&cfg, &mut ledger, &cli.out),
    };
    if let Err(commands::SetupError(e)) = run {
        eprintln!("config error: {e}");
        return ExitCode::from(2);
    }
    let mut stdout = std::io::stdout().lock();
    for c in &ledger.checks {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
            Status::Error => "ERROR",
        };
        match (c.residual, c.tolerance) {
            (Some(r), Some(t)) => writeln!(stdout, "{tag:5} {} residual {r:.3e} tol {t:.1e}", c.name),
            _ => writeln!(stdout, "{tag:5} {}", c.name),
        }
        .ok();
    }
    let code = if ledger.has(Status::Error) {
        3
    } else if ledger.has(Status::Fail) {
        1
    } else {
        0
    };
    let text = ledger.finish();
    let timing = serde_json::json!({ "command": name, "wall_clock_s": clock.elapsed().as_secs_f64() });
    let written = std::fs::write(cli.out.join("ledger.json"), text)
        .and_then(|_| std::fs::write(cli.out.join("timing.json"), timing.to_string() + "\n"));
    if let Err(e) = written {
        eprintln!("cannot write ledger: {e}");
        return ExitCode::from(2);
    }
    eprintln!("{name}: {:.2} s", clock.elapsed().as_secs_f64());
    ExitCode::from(code)
}
