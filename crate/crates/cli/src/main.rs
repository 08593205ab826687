use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand};

use mbp_core::harness::{
    check_report, diagnose, preset, run_examples, run_sweep, ExperimentConfig, SweepOptions,
    PRESETS,
};
use mbp_core::market::read_market;
use mbp_core::Mechanism;

#[derive(Parser)]
#[command(name = "mbp", version, about = "School-choice mechanisms and mutually-best-pairs conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write per-cell results as CSV.
    #[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
    Run {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named configuration instead of a file.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        preset: Option<String>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Results CSV; a summary is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Reuse finished cells from an existing output file.
        #[arg(long)]
        resume: bool,
        /// Report progress on stderr.
        #[arg(long, short)]
        verbose: bool,
    },
    /// Report which conditions a market satisfies.
    Check { market: PathBuf },
    /// Run one mechanism and report blocking pairs and efficiency.
    Diagnose {
        market: PathBuf,
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(Mechanism::ALL.map(Mechanism::name)))]
        mechanism: String,
    },
    /// Check all mechanisms and conditions against the reference examples.
    Examples,
}

fn load_config(config: Option<PathBuf>, preset_name: Option<String>) -> Result<ExperimentConfig> {
    match (config, preset_name) {
        (Some(path), None) => ExperimentConfig::load(&path)
            .with_context(|| format!("loading config {}", path.display())),
        (None, Some(name)) => preset(&name).ok_or_else(|| anyhow!("unknown preset {name}")),
        _ => bail!("exactly one of --config and --preset is required"),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            preset,
            seed,
            workers,
            out,
            resume,
            verbose,
        } => {
            let mut config = load_config(config, preset)?;
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            if let Some(workers) = workers {
                config.workers = workers;
            }
            config.output = Some(out);
            let report = run_sweep(&config, &SweepOptions { resume, progress: verbose })?;
            println!(
                "{} cells ({} resumed) written to {}",
                report.cells.len(),
                report.resumed_cells,
                report.csv_path.display()
            );
            println!("summary: {}", report.summary_path.display());
            println!("lambda alpha  da_efficient  seq_mbp  gmbp  da_eq_ttc  seq_mbp_but_ttc_differs");
            for row in &report.summaries {
                let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
                println!(
                    "{:<6} {:<6} {:>12}  {:>7}  {:>5}  {:>9}  {:>23}",
                    row.lambda,
                    row.alpha,
                    show(row.pct_da_efficient()),
                    show(row.pct_seq_mbp()),
                    show(row.pct_gmbp()),
                    show(row.pct_da_eq_ttc()),
                    row.seq_mbp_ttc_divergent.map_or_else(|| "-".to_string(), |c| c.to_string()),
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { market } => {
            let m = read_market(&market)?;
            println!("{}", check_report(&m));
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose { market, mechanism } => {
            let m = read_market(&market)?;
            let mech = Mechanism::from_name(&mechanism).expect("validated by clap");
            println!("{}", diagnose(&m, mech));
            Ok(ExitCode::SUCCESS)
        }
        Command::Examples => {
            let report = run_examples();
            println!("{report}");
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
