use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hignn_cli::config::{BenchConfig, GenDataConfig, PredictConfig, SimulateConfig, TrainCmdConfig};
use hignn_cli::{load_config, Command, RunOptions};

#[derive(Parser)]
#[command(name = "hignn", version, about = "Learned many-body hydrodynamic mobility for sphere suspensions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Inference worker threads (default: physical cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an oracle-labelled training set.
    GenData(Common),
    /// Train the surrogate on a training set.
    Train(Common),
    /// Predict velocities for one configuration.
    Predict(Common),
    /// Integrate particle trajectories.
    Simulate(Common),
    /// Drag-coefficient and timing tables.
    Bench(Common),
}

fn run(cli: Cli) -> hignn::Result<()> {
    let (cmd, common) = match cli.command {
        Cmd::GenData(c) => (Command::GenData, c),
        Cmd::Train(c) => (Command::Train, c),
        Cmd::Predict(c) => (Command::Predict, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Bench(c) => (Command::Bench, c),
    };
    let workers = common.workers.unwrap_or_else(num_cpus::get_physical);
    let opts = RunOptions { workers, seed: common.seed };
    let path = &common.config;
    match cmd {
        Command::GenData => {
            let r = hignn_cli::gen_data(load_config::<GenDataConfig>(path, cmd)?, opts)?;
            println!("samples: {}", r.count);
            println!("near-contact fraction: {:.4}", r.near_contact_fraction);
        }
        Command::Train => {
            let r = hignn_cli::train_cmd(load_config::<TrainCmdConfig>(path, cmd)?, opts)?;
            println!("final test loss: {:.6e}", r.final_test_loss);
            println!("best test loss: {:.6e} (epoch {})", r.best_test_loss, r.best_epoch);
        }
        Command::Predict => {
            let u = hignn_cli::predict(load_config::<PredictConfig>(path, cmd)?, opts)?;
            println!("predicted {} velocities", u.len());
        }
        Command::Simulate => {
            let t = hignn_cli::simulate_cmd(load_config::<SimulateConfig>(path, cmd)?, opts)?;
            println!("wrote {} frames", t.frames.len());
        }
        Command::Bench => {
            let r = hignn_cli::bench(load_config::<BenchConfig>(path, cmd)?, opts)?;
            println!("lattice rows: {}, chain rows: {}, timing rows: {}", r.lattice_rows, r.chain_rows, r.timing_rows);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HIGNN_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
