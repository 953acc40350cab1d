use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use focklab::lab::{run_experiment, write_report, CheckStatus, Experiment, LabConfig};

/// Runs truncated Fock-space experiments and writes JSON/CSV reports.
#[derive(Parser, Debug)]
#[command(name = "focklab", version)]
struct Cli {
    /// Print a runnable default configuration and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment.
    Run {
        /// Experiment name; overrides the config file.
        #[arg(long)]
        experiment: Option<String>,
        /// JSON configuration file; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for report.json and the CSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        degree: Option<u32>,
        #[arg(long)]
        window: Option<u32>,
    },
    /// List the available experiments.
    List,
}

const DEFAULT_OUT: &str = "focklab-out";

/// println! that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("FOCKLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .with_context(|| format!("FOCKLAB_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn build_config(
    experiment: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    n: Option<usize>,
    degree: Option<u32>,
    window: Option<u32>,
) -> anyhow::Result<LabConfig> {
    let mut cfg = match &config {
        Some(path) => LabConfig::load(path)?,
        None => LabConfig::default(),
    };
    if let Some(name) = experiment {
        cfg.experiment = Some(name.parse::<Experiment>()?);
    }
    if cfg.experiment.is_none() {
        bail!("no experiment given; pass --experiment or set it in the config");
    }
    if let Some(out) = out {
        cfg.out = Some(out);
    }
    if let Some(n) = n {
        cfg.n = n;
    }
    if let Some(d) = degree {
        cfg.degree = d;
    }
    if let Some(w) = window {
        cfg.window = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Ok(true) when every check passed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    if cli.print_defaults {
        let cfg = LabConfig {
            experiment: Some(Experiment::KernelIdentities),
            ..LabConfig::default()
        };
        say!("{}", cfg.to_json_pretty());
        return Ok(true);
    }
    match cli.command {
        None => bail!("no command given; try `focklab list` or `focklab run --experiment <name>`"),
        Some(Command::List) => {
            for e in Experiment::ALL {
                say!("{:<20} {}", e.name(), e.summary());
            }
            Ok(true)
        }
        Some(Command::Run {
            experiment,
            config,
            out,
            n,
            degree,
            window,
        }) => {
            let cfg = build_config(experiment, config, out, n, degree, window)?;
            init_threads()?;
            let report = run_experiment(&cfg)?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            let written = write_report(&report, &dir)?;
            for c in &report.checks {
                let tag = match c.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::PassWithinBudget => "pass-within-budget",
                    CheckStatus::Fail => "FAIL",
                };
                say!(
                    "{tag:<19} {:<44} value {:.3e}  threshold {:.3e}  budget {:.3e}",
                    c.name, c.value, c.threshold, c.budget
                );
            }
            for note in &report.notes {
                say!("note: {note}");
            }
            if let Some(t) = report.timing {
                say!("{} finished in {:.2} s", report.experiment, t.wall_clock_seconds);
            }
            say!("wrote {} files to {}", written.len(), dir.display());
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
