mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{is_usage_error, SweepArgs, WcfArgs};
use crate::config::{ConfigError, RunConfig, SystemArgs};

/// Work statistics of a driven Ohmic bath with optional qubit coupling.
#[derive(Debug, Parser)]
#[command(name = "workstat", version)]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress and print per-check margins
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    #[command(flatten)]
    system: SystemArgs,
    /// TOML configuration file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (directory for sweep); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Characteristic function samples: v, Re, Im
    Wcf {
        #[command(flatten)]
        common: Common,
        /// Largest v sampled
        #[arg(long)]
        v_max: Option<f64>,
        /// Number of samples from v = 0 to v_max
        #[arg(long)]
        samples: Option<usize>,
        /// All-order characteristic function (pure bath only)
        #[arg(long)]
        nonperturbative: bool,
    },
    /// Work density on a graded grid, with the atom weight in the header
    Wdf {
        #[command(flatten)]
        common: Common,
        /// Grid points on each side of W = 0
        #[arg(long)]
        half_points: Option<usize>,
        /// Also write the all-order density next to --out (pure bath only)
        #[arg(long)]
        nonperturbative: bool,
    },
    /// Mean extracted work, χ(iβ) and entropy production
    Wext {
        #[command(flatten)]
        common: Common,
    },
    /// Heat-engine / refrigerator report
    Engine {
        #[command(flatten)]
        common: Common,
        /// Use this mean work instead of computing it (requires --delta-s)
        #[arg(long, requires = "delta_s", allow_hyphen_values = true)]
        w_bar: Option<f64>,
        /// Use this entropy production instead of computing it (requires --w-bar)
        #[arg(long, requires = "w_bar", allow_hyphen_values = true)]
        delta_s: Option<f64>,
    },
    /// 2-D parameter sweep writing grid.csv, contour.csv and betaq.csv
    Sweep {
        #[command(flatten)]
        common: Common,
        /// x axis as param:min:max[:n[:linear|log]]
        #[arg(long)]
        x: Option<String>,
        /// y axis as param:min:max[:n[:linear|log]]
        #[arg(long)]
        y: Option<String>,
        /// w_ext, chi_i_beta, delta_s or figure_of_merit
        #[arg(long)]
        quantity: Option<String>,
        /// Bisect contour vertices onto the zero level
        #[arg(long)]
        refine: bool,
    },
    /// Run the built-in verification suite
    Verify,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let load = |c: &Common| RunConfig::load_optional(c.config.as_deref());
    match &cli.command {
        Command::Wcf { common, v_max, samples, nonperturbative } => commands::wcf(
            &load(common)?,
            WcfArgs {
                system: &common.system,
                out: common.out.as_deref(),
                v_max: *v_max,
                samples: *samples,
                nonperturbative: *nonperturbative,
            },
        ),
        Command::Wdf { common, half_points, nonperturbative } => commands::wdf(
            &load(common)?,
            &common.system,
            common.out.as_deref(),
            *half_points,
            *nonperturbative,
        ),
        Command::Wext { common } => commands::wext(&load(common)?, &common.system, common.out.as_deref()),
        Command::Engine { common, w_bar, delta_s } => {
            commands::engine(&load(common)?, &common.system, common.out.as_deref(), w_bar.zip(*delta_s))
        }
        Command::Sweep { common, x, y, quantity, refine } => commands::sweep(
            &load(common)?,
            SweepArgs {
                system: &common.system,
                out: common.out.as_deref(),
                x: x.as_deref(),
                y: y.as_deref(),
                quantity: quantity.as_deref(),
                refine: *refine,
            },
        ),
        Command::Verify => commands::verify(cli.verbose),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let usage = e.downcast_ref::<ConfigError>().is_some()
        || e.downcast_ref::<workstat::Error>().is_some_and(is_usage_error);
    if usage {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
