mod args;
mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dualgap_core::approximator::PlanKind;
use dualgap_core::Error;

use args::{parse_resolutions, parse_schedule, InstanceArgs};
use report::{Format, Report};

/// Duality-gap laboratory for discretized transport problems.
#[derive(Debug, Parser)]
#[command(name = "dualgap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    /// Report file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0, global = true)]
    jobs: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grid primal and dual values per resolution.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Resolutions: N, N1,N2,... or a doubling range A..B.
        #[arg(long = "n", alias = "n-range", default_value = "8")]
        n: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Partial values over resolutions and a tolerance schedule.
    GapScan {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long = "n", alias = "n-range", default_value = "4..64")]
        n: String,
        /// Strictly decreasing tolerances in (0,1); `1/n` couples to the resolution.
        #[arg(long, default_value = "1/n")]
        eps: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Lower envelope of sampled dual pairs against the cost.
    Rectify {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long = "n", default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Negligibility verdict and plan-mass trend for a set descriptor.
    Negligible {
        /// Descriptor, e.g. `diagonal`, `segment y=0.3 x∈[0,0.5]`, `points [(0.5,0.5)]`.
        descriptor: String,
        #[arg(long = "n", alias = "n-range", default_value = "4..64")]
        n: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Block approximation of a reference plan.
    Approximate {
        #[command(flatten)]
        instance: InstanceArgs,
        /// diagonal, anti-diagonal, product or shift.
        #[arg(long, default_value = "diagonal")]
        plan: String,
        #[arg(long = "n", alias = "n-range", default_value = "4,8,16")]
        n: String,
        /// Inner resolution of each block.
        #[arg(long, default_value_t = 8)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List catalog entries or print one as instance JSON.
    Catalog {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "n", default_value_t = 6)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_PRECONDITION: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Precondition(_)) => EXIT_PRECONDITION,
        Some(Error::Io(_)) | None => EXIT_FAILURE,
        Some(_) => EXIT_INPUT,
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn run(cli: Cli) -> Result<()> {
    let (report, output, default_format): (Report, OutputArgs, Format) = match cli.command {
        Command::Solve { instance, n, seed, output } => {
            let ns = parse_resolutions(&n)?;
            let inst = instance.resolve(seed, ns[0])?;
            (pool(output.jobs)?.install(|| commands::solve(&inst, &ns))?, output, Format::Csv)
        }
        Command::GapScan { instance, n, eps, seed, output } => {
            let ns = parse_resolutions(&n)?;
            let schedule = parse_schedule(&eps)?;
            let inst = instance.resolve(seed, ns[0])?;
            (pool(output.jobs)?.install(|| commands::gap_scan(&inst, &ns, &schedule))?, output, Format::Csv)
        }
        Command::Rectify { instance, n, budget, seed, output } => {
            let inst = instance.resolve(seed, n)?;
            (pool(output.jobs)?.install(|| commands::rectify(&inst, n, budget, seed))?, output, Format::Csv)
        }
        Command::Negligible { descriptor, n, output } => {
            let ns = parse_resolutions(&n)?;
            (pool(output.jobs)?.install(|| commands::negligible(&descriptor, &ns))?, output, Format::Json)
        }
        Command::Approximate { instance, plan, n, s, seed, output } => {
            let ns = parse_resolutions(&n)?;
            let kind: PlanKind = plan.parse()?;
            let inst = instance.resolve(seed, ns[0])?;
            (pool(output.jobs)?.install(|| commands::approximate(&inst, kind, &ns, s))?, output, Format::Csv)
        }
        Command::Catalog { instance, list, seed, n, output } => {
            let report = if list || (instance.target.is_none() && instance.catalog.is_none() && instance.instance.is_none()) {
                commands::catalog_list()
            } else {
                commands::catalog_show(&instance.resolve(seed, n)?)?
            };
            let format = if list { Format::Csv } else { Format::Json };
            (report, output, format)
        }
    };
    report.emit(output.format.unwrap_or(default_format), output.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
