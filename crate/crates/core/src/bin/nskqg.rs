use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nskqg::harness::check::run_checks;
use nskqg::harness::{parse_config, run_experiment, ExperimentConfig, ExperimentKind, Outcome, RunReport};

#[derive(Parser)]
#[command(name = "nskqg", about = "NSK to quasi-geostrophic limit experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Run an eps sweep (the config's experiment kind is forced to sweep).
    Sweep { config: PathBuf },
    /// Run the identity and property suite.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the config after defaults are filled in.
    Info { config: PathBuf },
}

fn load(path: &PathBuf) -> nskqg::Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn report(r: &RunReport) {
    let outcome = |o: &Outcome| match o {
        Outcome::Completed => "completed".to_string(),
        Outcome::Aborted { last_good_t, reason } => format!("aborted at t={last_good_t}: {reason}"),
    };
    match r {
        RunReport::Nsk(run) | RunReport::Qg(run) => {
            println!("{} rows, {}", run.rows.len(), outcome(&run.outcome));
        }
        RunReport::Limit(run) => {
            println!("{} rows, {}", run.rows.len(), outcome(&run.outcome));
            if let Some(f) = run.final_row() {
                println!("final: t={} H_eps={:.6e} norm_rho_gamma={:.6e}", f.t, f.h_eps, f.norm_rho_gamma);
            }
        }
        RunReport::Sweep(s) => {
            print!("{}", s.fits_csv());
            println!("config hash {:016x}, wall time {:.1} s", s.config_hash, s.wall_time_s);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config } => load(&config).and_then(|c| run_experiment(&c)).map(|r| report(&r)),
        Cmd::Sweep { config } => load(&config)
            .and_then(|mut c| {
                c.experiment = ExperimentKind::Sweep;
                run_experiment(&c)
            })
            .map(|r| report(&r)),
        Cmd::Check { seed } => {
            let outcomes = run_checks(seed);
            for c in &outcomes {
                println!("{c}");
            }
            if outcomes.iter().all(|c| c.passed) {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
        Cmd::Info { config } => load(&config).map(|c| print!("{}", c.to_toml())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
