use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maxreg_lab::{load_config, run_experiment_with_threads, write_results, ExperimentKind};

const CONFIG_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "maxreg-lab", version, about = "Numerical maximal-regularity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its record and tables.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: rayon's choice).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the experiment kinds.
    ListExperiments,
    /// Check a config and print it with every default filled in.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CONFIG_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<12} {}", k.name(), k.summary());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config).and_then(|c| c.validated()) {
            Ok(c) => {
                print!("{}", c.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(CONFIG_ERROR)
            }
        },
        Command::Run { config, out, seed, threads } => {
            let mut cfg = match load_config(&config).and_then(|c| c.validated()) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            if let Some(s) = seed {
                cfg.rng_seed = s;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let record = match run_experiment_with_threads(&cfg, threads) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            match write_results(&record, &dir) {
                Ok(paths) => {
                    for p in paths {
                        log::info!("wrote {}", p.display());
                    }
                }
                Err(e) => {
                    eprintln!("error: writing {}: {e}", dir.display());
                    return ExitCode::FAILURE;
                }
            }
            println!("{}: {:?}", record.experiment, record.status);
            for d in &record.diagnostics {
                println!("  {d}");
            }
            ExitCode::from(record.status.exit_code() as u8)
        }
    }
}
