//! The `epig-bench` command line.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::identities::check_identities;
use crate::report::{write_ablation, write_results, write_score_map};
use crate::sim::{
    ablate_eval_size, build_pools, default_grid, pool_seed, run_experiment, score_map,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_IDENTITY: i32 = 3;

pub const THREADS_ENV: &str = "EPIG_BENCH_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "epig-bench",
    version,
    about = "Active-learning acquisition benchmarks: BALD, BatchBALD, EPIG-BALD",
    after_help = "Softmax acquisition samples with weight exp(temperature * score): larger temperature is greedier.\n\
                  Exit codes: 1 configuration error, 2 runtime failure, 3 identity check failure."
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,
    /// Override `experiment.trials`.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Override `experiment.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (parallelism only; results do not depend on it).
    /// Falls back to EPIG_BENCH_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured experiment and write CSV/SVG results.
    Run { config: PathBuf },
    /// Rerun with several evaluation-set sizes.
    AblateEval {
        config: PathBuf,
        /// Comma-separated sizes, e.g. 10,50,200.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
    },
    /// BALD and EPIG-BALD score maps over a 2D grid.
    ToyMap {
        config: PathBuf,
        /// Grid points per axis.
        #[arg(long, default_value_t = 41)]
        grid_steps: usize,
    },
    /// Exact-enumeration identity suites; exit 0 iff all pass.
    CheckIdentities {
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
    /// Parse and validate a configuration; print its canonical form and digest.
    ValidateConfig { config: PathBuf },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::ConfigParse(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn load(path: &Path, cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = parse_config(path)?;
    if let Some(t) = cli.trials {
        config.experiment.trials = t;
    }
    if let Some(s) = cli.seed {
        config.experiment.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn write_config(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.toml"), config.to_canonical_string())?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run { config } => {
            let config = load(config, cli)?;
            let logs = run_experiment(&config)?;
            write_config(&config, &cli.out_dir)?;
            write_results(&logs, &cli.out_dir)?;
            eprintln!("wrote {}", cli.out_dir.display());
        }
        Command::AblateEval { config, sizes } => {
            let config = load(config, cli)?;
            let entries = ablate_eval_size(&config, sizes)?;
            write_config(&config, &cli.out_dir)?;
            write_ablation(&entries, &config.digest(), &cli.out_dir)?;
            for e in &entries {
                println!(
                    "eval_size {:>6}  median final accuracy {:.4}",
                    e.eval_size, e.median_final_accuracy
                );
            }
        }
        Command::ToyMap { config, grid_steps } => {
            let config = load(config, cli)?;
            let pools = build_pools(&config, pool_seed(&config, 0))?;
            let points: Vec<Vec<f64>> = pools
                .train
                .iter()
                .map(|e| e.x.clone())
                .chain(pools.eval_x.iter().cloned())
                .chain(pools.pool.features().iter().cloned())
                .collect();
            let grid = default_grid(&points, *grid_steps)?;
            let map = score_map(&config, &grid)?;
            write_config(&config, &cli.out_dir)?;
            write_score_map(&map, &config.digest(), &cli.out_dir)?;
            eprintln!("wrote {}", cli.out_dir.display());
        }
        Command::CheckIdentities { instances } => {
            let reports = check_identities(*instances, cli.seed.unwrap_or(0))?;
            for r in &reports {
                println!("{}", r.line());
            }
            if reports.iter().any(|r| !r.passed()) {
                return Ok(EXIT_IDENTITY);
            }
        }
        Command::ValidateConfig { config } => {
            let config = load(config, cli)?;
            print!("{}", config.to_canonical_string());
            println!("# digest {}", config.digest());
        }
    }
    Ok(EXIT_OK)
}

fn thread_count(cli: &Cli) -> std::result::Result<Option<usize>, String> {
    if let Some(t) = cli.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got `{v}`")),
        Err(_) => Ok(None),
    }
}

/// Parse `argv` (program name first) and run. Returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count(&cli) {
        Ok(Some(0)) => {
            eprintln!("error: thread count must be >= 1");
            return EXIT_CONFIG;
        }
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
