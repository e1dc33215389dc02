use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use copsl::config::{Mode, RunConfig};
use copsl::problems::{write_front_csv, ProblemId, ProblemSpec};
use copsl::runner::{Runner, RunState};
use copsl::warmstart::{dense_true_front, Nsga2Config};
use copsl::{Error, Result};

#[derive(Parser)]
#[command(name = "copsl", version, about = "Controllable Pareto set learning for expensive multi-objective optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<Mode>,
        /// Stop once this many iterations are logged (the initial design counts as one).
        #[arg(long)]
        stop_after: Option<usize>,
        /// Continue from the checkpoint in the run directory if there is one.
        #[arg(long)]
        resume: bool,
    },
    /// Aggregate run logs into per-(problem, mode) plot CSVs.
    Export {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute MED of a checkpointed model on a K-preference grid.
    Med {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long = "K", short = 'K')]
        k: usize,
    },
    /// Serve a checkpointed session over HTTP.
    Serve {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Override the evaluation budget of the session.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Print the default config for a problem as TOML.
    PrintConfig {
        #[arg(long)]
        problem: ProblemId,
    },
    /// Approximate a true Pareto front by repeated NSGA-II on the true objectives.
    GenFront {
        #[arg(long)]
        problem: ProblemId,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 400)]
        population: usize,
        #[arg(long, default_value_t = 400)]
        generations: usize,
        #[arg(long, default_value_t = 4)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            seed,
            mode,
            stop_after,
            resume,
        } => run(&config, seed, mode, stop_after, resume),
        Command::Export { runs, out } => {
            let logs = copsl::export::load_runs(&runs)?;
            if logs.is_empty() {
                return Err(Error::InvalidArgument(format!("no runs under {}", runs.display())));
            }
            for path in copsl::export::export_plot_data(&logs, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Med { checkpoint, k } => med(&checkpoint, k),
        Command::Serve {
            checkpoint,
            port,
            host,
            budget,
        } => {
            let mut runner = Runner::from_checkpoint(&checkpoint)?;
            if let Some(dir) = checkpoint.parent() {
                runner = runner.with_output(dir);
            }
            if let Some(b) = budget {
                runner.set_budget(b);
            }
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad address {host}:{port}")))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io(Path::new("<runtime>"), e))?;
            eprintln!("listening on {addr}");
            rt.block_on(copsl::service::serve(runner, addr))
                .map_err(|e| Error::io(Path::new("<socket>"), e))
        }
        Command::PrintConfig { problem } => {
            print!("{}", RunConfig::default_for(problem).to_toml());
            Ok(())
        }
        Command::GenFront {
            problem,
            out,
            population,
            generations,
            runs,
            seed,
        } => {
            let spec = ProblemSpec::new(problem);
            let cfg = Nsga2Config {
                population,
                generations,
                ..Nsga2Config::default()
            };
            let points = dense_true_front(&spec, &cfg, runs, seed)?;
            write_front_csv(&out, &points)?;
            println!("{} points -> {}", points.len(), out.display());
            Ok(())
        }
    }
}

fn run(path: &Path, seed: Option<u64>, mode: Option<Mode>, stop_after: Option<usize>, resume: bool) -> Result<()> {
    let mut config = RunConfig::load(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(m) = mode {
        config.mode = m;
    }
    config.validate()?;
    let dir = config.run_dir();
    let checkpoint = dir.join("checkpoint.json");
    let runner = if resume && checkpoint.is_file() {
        let state = RunState::load(&checkpoint)?;
        if state.config != config {
            return Err(Error::Config(format!(
                "checkpoint in {} was written under a different config",
                dir.display()
            )));
        }
        Runner::from_state(state)?
    } else {
        Runner::new(config)?
    };
    let mut runner = runner.with_output(&dir);
    runner.run(stop_after)?;
    if let Some(last) = runner.records().last() {
        println!(
            "{} iteration {} evaluations {} hv {:.6} lhd {:.6}",
            dir.display(),
            last.iteration,
            last.evaluations,
            last.hv,
            last.lhd
        );
    }
    Ok(())
}

fn med(checkpoint: &Path, k: usize) -> Result<()> {
    let runner = Runner::from_checkpoint(checkpoint)?;
    let missing = || Error::InvalidArgument("checkpoint has no trained model".into());
    let psm = runner.psm().ok_or_else(missing)?;
    let surrogates = runner.surrogates().ok_or_else(missing)?;
    let z = runner.state().ideal_point.as_ref().ok_or_else(missing)?;
    let report = copsl::metrics::med(psm, surrogates, runner.problem(), k, runner.front(), z)?;
    println!("med {}", report.med);
    if let Some(t) = report.true_med {
        println!("true_med {t}");
    }
    Ok(())
}
