use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nls_expocol::experiments::{
    cmd_compare, cmd_converge, cmd_drift, cmd_reference, cmd_run, load_config, ExperimentConfig,
    ExperimentError,
};
use nls_expocol::integrator::Method;
use nls_expocol::parallel::Execution;

#[derive(Debug, Parser)]
#[command(
    name = "nls-expocol",
    version,
    about = "Exponential collocation studies for the cubic NLS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Methods to use, e.g. `ecm2,strang` (overrides `methods`).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    method: Vec<Method>,
    /// `key=value` config override; dotted keys reach nested fields.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    plot: bool,
    /// Run sweep entries one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single trajectory: run.csv.
    Run(Common),
    /// Global error and observed order per stepsize: converge.csv.
    Converge(Common),
    /// Long-horizon energy drift: drift.csv, drift_summary.csv.
    Drift(Common),
    /// Error, energy error, cost per (method, h): compare.csv.
    Compare(Common),
    /// Compute or reuse the cached reference solution.
    Reference(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Run(c)
            | Command::Converge(c)
            | Command::Drift(c)
            | Command::Compare(c)
            | Command::Reference(c) => c,
        }
    }
}

fn resolve(common: &Common) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = load_config(&common.config, &common.overrides)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if !common.method.is_empty() {
        cfg.methods = common.method.clone();
    }
    cfg.plot |= common.plot;
    Ok(cfg)
}

fn execute(cmd: &Command) -> Result<(), ExperimentError> {
    let common = cmd.common();
    let cfg = resolve(common)?;
    let exec = if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let out = cfg.output_dir.clone();
    match cmd {
        Command::Run(_) => {
            let rec = cmd_run(&cfg, &out)?;
            println!(
                "{} h={} steps={} max|energy err|={:e} max|mass err|={:e} -> {}",
                rec.method,
                rec.h,
                rec.steps,
                rec.max_energy_error(),
                rec.max_mass_error(),
                out.join("run.csv").display()
            );
        }
        Command::Converge(_) => {
            for r in cmd_converge(&cfg, &out, exec)? {
                let order = r
                    .observed_order
                    .map(|o| format!("{o:.3}"))
                    .unwrap_or_else(|| "-".into());
                println!(
                    "{:<7} h={:<12} error={:.6e} order={order}",
                    r.method, r.h, r.error
                );
            }
            println!("-> {}", out.join("converge.csv").display());
        }
        Command::Drift(_) => {
            let s = cmd_drift(&cfg, &out)?;
            println!(
                "{} h={} max first half={:e} max full={:e} ratio={:.3} -> {}",
                s.record.method,
                s.record.h,
                s.max_first_half,
                s.max_full,
                s.ratio(),
                out.join("drift.csv").display()
            );
        }
        Command::Compare(_) => {
            for r in cmd_compare(&cfg, &out, exec)? {
                println!(
                    "{:<7} h={:<12} error={:.6e} max|energy err|={:.3e} wall={:.3}s fp={:.2}",
                    r.method, r.h, r.error, r.max_energy_error, r.wall_clock_s, r.mean_fp_iters
                );
            }
            println!("-> {}", out.join("compare.csv").display());
        }
        Command::Reference(_) => {
            let (_, status, path) = cmd_reference(&cfg)?;
            println!("reference {status:?} -> {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
