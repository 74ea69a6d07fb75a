//! Command-line front end of the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use selfhood::harness::{export_results, list_experiments, run_experiment, ExperimentConfig, ExportFormat};

#[derive(Parser)]
#[command(name = "selfhood", version, about = "Run seeded spiking self-model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Registered experiments with their level tags.
    List,
    /// Run one experiment; exits 1 when an acceptance check fails.
    Run {
        experiment: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parameter override, `key=value`; dotted keys reach nested tables.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// TOML file with optional `seed` and a `[params]` table.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for summary.json and the CSV series.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gather the summaries under a run directory into one file.
    Export {
        dir: PathBuf,
        #[arg(long, value_parser = ["json", "csv"])]
        format: String,
    },
}

fn run(cli: Cli) -> selfhood::Result<bool> {
    match cli.command {
        Command::List => {
            for e in list_experiments() {
                println!("{:<22} {}  {}", e.name, e.level, e.description);
            }
            Ok(true)
        }
        Command::Run {
            experiment,
            seed,
            set,
            config,
            out,
        } => {
            let mut cfg = ExperimentConfig::new(&experiment, seed);
            if let Some(path) = config {
                let text = std::fs::read_to_string(&path)?;
                let explicit_seed = std::env::args().any(|a| a == "--seed" || a.starts_with("--seed="));
                cfg = cfg.merge_toml(&text)?;
                if explicit_seed {
                    cfg.seed = seed;
                }
            }
            for s in &set {
                let (k, v) = ExperimentConfig::parse_assignment(s)?;
                cfg.overrides.insert(k, v);
            }
            cfg.out_dir = out.clone();
            let r = run_experiment(&cfg)?;
            if out.is_none() {
                print!("{}", r.summary_json());
            }
            for c in &r.checks {
                eprintln!("{} {:<28} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            eprintln!("{} seed {} hash {} in {:.0} ms", r.experiment, r.seed, &r.config_hash[..12], r.wall_clock_ms);
            if let Some(dir) = out {
                eprintln!("wrote {}", dir.display());
            }
            Ok(r.passed)
        }
        Command::Export { dir, format } => {
            let f: ExportFormat = format.parse()?;
            println!("{}", export_results(&dir, f)?.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
