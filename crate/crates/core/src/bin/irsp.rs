use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use irsp_core::commands::{self, Format};
use irsp_core::config::load_config;

#[derive(Parser)]
#[command(name = "irsp", version, about = "Interacting reinforced stochastic processes: analysis, simulation and limit verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classes, levels, bipartiteness, drift diagnostics and predicted limits
    Analyze(Common),
    /// Per-run trajectory files plus a manifest
    Simulate(Common),
    /// Ensemble run checked against the predictions; exit status 0 iff all pass
    Verify(Common),
    /// Forced and hierarchical limit solves only
    Limits(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    steps: Option<u64>,
    /// Output directory (overrides the config's `out`)
    #[arg(long, env = "IRSP_OUT_DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let (Command::Analyze(c) | Command::Simulate(c) | Command::Verify(c) | Command::Limits(c)) = &cli.command;
    let mut cfg = load_config(&c.config).with_context(|| format!("loading {}", c.config.display()))?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = c.runs {
        anyhow::ensure!(r >= 1, "--runs must be at least 1");
        cfg.n_runs = r;
    }
    if let Some(s) = c.steps {
        cfg.n_steps = s;
    }
    let out = c.out.clone().or_else(|| cfg.out.clone());
    let format = match c.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => Format::default(),
    };

    match &cli.command {
        Command::Analyze(_) => {
            let an = commands::cmd_analyze(&cfg)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&an)?),
                Format::Csv => print!("{}", commands::analysis_csv(&an)),
            }
            Ok(0)
        }
        Command::Simulate(_) => {
            let dir = out.context("simulate needs an output directory (--out, IRSP_OUT_DIR or [run] out)")?;
            let format = c.format.map_or(Format::Csv, |_| format);
            let m = commands::cmd_simulate(&cfg, &dir, format)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
            Ok(0)
        }
        Command::Verify(_) => {
            let outcome = commands::cmd_verify(&cfg, out.as_deref(), c.format.map_or(Format::Csv, |_| format))?;
            println!("{}", serde_json::to_string_pretty(&outcome.report)?);
            for c in &outcome.report.classes {
                eprintln!(
                    "class {} ({}): {} {} = {:.3e} (tol {}) {}",
                    c.class_id,
                    c.kind,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.statistic_name,
                    c.statistic,
                    c.threshold,
                    c.nondegeneracy.as_ref().map(|n| format!("variance {:.3e}", n.variance)).unwrap_or_default()
                );
            }
            Ok(outcome.exit_code() as u8)
        }
        Command::Limits(_) => {
            let l = commands::cmd_limits(&cfg)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&l)?),
                Format::Csv => print!("{}", commands::limits_csv(&l)),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
