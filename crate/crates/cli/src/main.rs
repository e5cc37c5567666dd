use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tdr_cli::{
    cmd_basis, cmd_forward, cmd_invert, cmd_pipeline, cmd_study, default_schedule, level_means, parse_schedule,
    CliError, RunConfig,
};

#[derive(Parser)]
#[command(name = "mxtdr", about = "Initial electric field reconstruction from boundary data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a phantom and write its boundary record.
    Forward(Common),
    /// Reconstruct from a record and score against the phantom.
    Invert {
        #[arg(long)]
        record: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Forward run and inversion with a table of region errors.
    Pipeline {
        #[arg(long)]
        test: Option<u8>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Error versus noise level, written as CSV.
    Study {
        #[arg(long)]
        test: Option<u8>,
        /// Comma-separated `delta:epsilon` pairs.
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Dump basis samples, Gram matrix and stiffness matrix as CSV.
    Basis {
        #[arg(long, default_value_t = 15)]
        order: usize,
        #[arg(long, default_value_t = 2.5)]
        final_time: f64,
        #[arg(long, default_value_t = 73)]
        num_samples: usize,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Forward(common) => {
            let out = cmd_forward(&common.resolve()?)?;
            println!("{}\n{}", out.record.display(), out.phantom.display());
        }
        Command::Invert { record, common } => {
            print!("{}", cmd_invert(&record, &common.resolve()?)?.table());
        }
        Command::Pipeline { test, delta, seed, common } => {
            let mut cfg = common.resolve()?;
            cfg.test_id = test.unwrap_or(cfg.test_id);
            cfg.delta = delta.unwrap_or(cfg.delta);
            cfg.seed = seed.unwrap_or(cfg.seed);
            print!("{}", cmd_pipeline(&cfg)?.table());
        }
        Command::Study { test, schedule, seeds, common } => {
            let mut cfg = common.resolve()?;
            cfg.test_id = test.unwrap_or(cfg.test_id);
            let schedule = match schedule {
                Some(s) => parse_schedule(&s)?,
                None => default_schedule(),
            };
            let seeds: Vec<u64> = (1..=seeds).collect();
            let rows = cmd_study(&cfg, &schedule, &seeds)?;
            for (lv, mean) in schedule.iter().zip(level_means(&schedule, &rows)) {
                println!("delta {:<6} eps {:<8e} mean L2 {:.4}", lv.delta, lv.epsilon_reg, mean);
            }
        }
        Command::Basis { order, final_time, num_samples, output_dir } => {
            cmd_basis(order, final_time, num_samples, &output_dir)?;
            println!("{}", output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
