use std::path::PathBuf;
use std::process::ExitCode;

use ckdv_cli::config::{self, Cadence};
use ckdv_cli::runner::{self, Axis};
use ckdv_cli::{presets, CliError, RunConfig};
use clap::{Args, Parser, Subcommand};
use toml::Value;

#[derive(Parser)]
#[command(name = "ckdv", version, about = "Explicit finite-difference runs of coupled KdV systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Run even when the time step fails the stability relation.
    #[arg(long)]
    force_unstable: bool,
    /// Constant of the step-size rule.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` overrides, e.g. `--set grid.h=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration (a TOML file or a scenario name).
    Run {
        config: String,
        #[command(flatten)]
        flags: RunFlags,
        /// Snapshot interval in simulated time, if the config sets none.
        #[arg(long)]
        snapshot_time: Option<f64>,
    },
    /// Run a grid of variants concurrently.
    Sweep {
        config: String,
        /// `key=v1,v2,...`; repeat for a cartesian product.
        #[arg(long, required = true)]
        vary: Vec<Axis>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Error against the closed form for a list of decreasing mesh sizes.
    Converge {
        config: String,
        #[arg(long, value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Per-mode differences between two snapshot files.
    Compare { a: PathBuf, b: PathBuf },
    /// List the named scenarios.
    Scenarios,
}

/// Reads a config file, or treats an existing scenario name as
/// `scenario = "<name>"`.
fn load(source: &str, flags: &RunFlags) -> Result<Value, CliError> {
    let doc = if presets::scenario(source).is_some() && !std::path::Path::new(source).exists() {
        let mut t = toml::Table::new();
        t.insert("scenario".into(), Value::String(source.into()));
        Value::Table(t)
    } else {
        config::load_document(std::path::Path::new(source))?
    };
    let mut doc = config::expand_scenario(doc)?;
    for kv in &flags.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value (got {kv:?})")))?;
        config::set_path(&mut doc, k.trim(), config::parse_scalar(v.trim()))?;
    }
    if let Some(alpha) = flags.alpha {
        config::set_path(&mut doc, "time.alpha", Value::Float(alpha))?;
    }
    if let Some(out) = &flags.out {
        config::set_path(&mut doc, "output.directory", Value::String(out.display().to_string()))?;
    }
    Ok(doc)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config: source,
            flags,
            snapshot_time,
        } => {
            let mut cfg: RunConfig = config::from_document(load(&source, &flags)?)?;
            if cfg.output.snapshot_every.is_none() {
                cfg.output.snapshot_every = snapshot_time.map(Cadence::Time);
            }
            let summary = runner::run(&cfg, flags.force_unstable)?;
            println!(
                "completed {} steps to t = {} (tau = {:.3e}) in {}",
                summary.steps,
                summary.t_final,
                summary.tau,
                summary.directory.display()
            );
            let last = &summary.final_sample;
            println!(
                "final: vector norm {:.6e}, mode-1 peaks {}",
                last.vector_norm, last.peak_count_mode1
            );
            if let (Some(c0), Some(c1)) = (summary.initial_sample.conserved_hs, last.conserved_hs) {
                println!("conserved quantity {c0:.9e} -> {c1:.9e}");
            }
            if let Some(err) = &summary.max_percent_error {
                let list: Vec<String> = err.iter().map(|e| format!("{e:.4}")).collect();
                println!("max %Error per mode: {}", list.join(", "));
            }
            Ok(())
        }
        Command::Sweep {
            config: source,
            vary,
            flags,
        } => {
            let doc = load(&source, &flags)?;
            let runs = runner::sweep(&doc, &vary, flags.force_unstable)?;
            let mut worst: Option<CliError> = None;
            for r in runs {
                match r.result {
                    Ok(s) => println!("{}: {} steps, t = {}", r.label, s.steps, s.t_final),
                    Err(e) => {
                        println!("{}: {e}", r.label);
                        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                            worst = Some(e);
                        }
                    }
                }
            }
            worst.map_or(Ok(()), Err)
        }
        Command::Converge {
            config: source,
            h_list,
            flags,
        } => {
            let cfg = config::from_document(load(&source, &flags)?)?;
            let rows = runner::converge(&cfg, &h_list)?;
            print!("{}", runner::convergence_table(&rows));
            Ok(())
        }
        Command::Compare { a, b } => {
            let cmp = runner::compare(&a, &b)?;
            for (n, (m, l)) in cmp.max_abs_diff.iter().zip(&cmp.l2_diff).enumerate() {
                println!("theta{}: max |diff| {m:.6e}, L2 diff {l:.6e}", n + 1);
            }
            Ok(())
        }
        Command::Scenarios => {
            for name in presets::SCENARIOS {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
