use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use photofrag::{execute, plan, EngineError, ExecOptions, Result, RunConfig};
use photofrag_core::boundstates::{level_table, levels_csv};
use photofrag_core::spectra::{cut, CutAxis};

#[derive(Parser)]
#[command(name = "photofrag", version, about = "Strong-field photodissociation spectra")]
struct Cli {
    /// Reserved; the pipeline has no random numbers and this flag is rejected.
    #[arg(long, global = true)]
    seedless: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Parallel jobs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "cache")]
    cache: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Bound-state table (v, N, E) of the ground curve.
    Levels {
        #[arg(long)]
        config: PathBuf,
        /// Highest v listed.
        #[arg(long)]
        v_max: Option<usize>,
        /// Also write the table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: propagate, project, average, write outputs.
    Run(Common),
    /// Print the job lattice.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Only print; never execute (the default for this subcommand).
        #[arg(long)]
        dry_run: bool,
    },
    /// Re-run projection and averaging from cached amplitudes.
    Project(Common),
    /// Extract a curve from a detector image block.
    Cut {
        #[arg(long)]
        image: PathBuf,
        /// α = 0 cut along k_ρ.
        #[arg(long, conflicts_with = "k_rho")]
        alpha0: bool,
        /// Angular cut at this k_ρ (a.u.).
        #[arg(long)]
        k_rho: Option<f64>,
    },
}

fn load(config: &Path) -> Result<RunConfig> {
    RunConfig::load(config)
}

fn run(cli: Cli) -> Result<()> {
    if cli.seedless {
        return Err(EngineError::Config(
            "--seedless is reserved: the pipeline draws no random numbers".into(),
        ));
    }
    match cli.command {
        Command::Levels { config, v_max, out } => {
            let cfg = load(&config)?;
            let grid = cfg.grid.radial()?;
            let levels = level_table(&cfg.potential, &cfg.constants, cfg.populations.n_max, v_max, &grid)?;
            let csv = levels_csv(&levels);
            if let Some(path) = out {
                photofrag_core::io::write_atomic(&path, csv.as_bytes())?;
            }
            print!("{csv}");
        }
        Command::Run(c) => {
            let p = plan(load(&c.config)?, c.out, c.cache);
            let opts = ExecOptions {
                workers: c.workers,
                ..Default::default()
            };
            execute(&p, opts)?.outcome()?;
        }
        Command::Plan { common, .. } => {
            let p = plan(load(&common.config)?, common.out, common.cache);
            print!("{}", p.describe());
        }
        Command::Project(c) => {
            let p = plan(load(&c.config)?, c.out, c.cache);
            let opts = ExecOptions {
                workers: c.workers,
                propagate: false,
                reproject: true,
            };
            execute(&p, opts)?.outcome()?;
        }
        Command::Cut { image, alpha0, k_rho } => {
            let img = photofrag::engine::read_image(&image)?;
            let (axis, name) = match (alpha0, k_rho) {
                (_, Some(k)) => (CutAxis::FixedKRho(k), "alpha"),
                (true, None) => (CutAxis::Alpha0, "k_rho"),
                (false, None) => {
                    return Err(EngineError::Config("cut: give --alpha0 or --k-rho".into()))
                }
            };
            let c = cut(&img, axis)?;
            if let Some(s) = c.snapped {
                eprintln!("k_rho snapped to {s}");
            }
            print!("{}", c.to_csv(name));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
