use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dispinn::pinn::TrainMode;
use dispinn_cli::commands::{cmd_export_plots, cmd_reproduce, cmd_rom, cmd_snapshots, cmd_train};
use dispinn_cli::config::{ExperimentConfig, Overrides, ReproduceConfig, TableId};
use dispinn_cli::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    InGraph,
    Detached,
}

#[derive(Debug, Parser)]
#[command(name = "dispinn", version, about = "Discretized-physics PINN experiments")]
struct Cli {
    /// Experiment (or reproduce) configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Use this seed instead of the configured list.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR", default_value = "runs")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Epochs between Jacobian refreshes in detached mode.
    #[arg(long, global = true, value_name = "K")]
    jacobian_interval: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// March the configured problem and write its snapshot matrix.
    Snapshots,
    /// POD sweep, basis and DEIM files, reduced-march check.
    Rom,
    /// Train one network with the first configured seed.
    Train,
    /// Rerun a published result table and compare against the reported values.
    Reproduce {
        /// table1, table2, table3, table4, mass_spring_trials or jacobian_interval
        table: String,
    },
    /// Write plot-ready CSVs for a finished training run.
    ExportPlots {
        run_dir: PathBuf,
    },
}

fn config_path(cli: &Cli) -> Result<&Path, CliError> {
    cli.config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config PATH is required for this command".into()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let ov = Overrides {
        seed: cli.seed,
        mode: cli.mode.map(|m| match m {
            Mode::InGraph => TrainMode::InGraph,
            Mode::Detached => TrainMode::Detached,
        }),
        jacobian_interval: cli.jacobian_interval,
    };
    match &cli.command {
        Command::Snapshots => {
            let cfg = ExperimentConfig::load(config_path(cli)?, &ov)?;
            let dir = cmd_snapshots(&cfg, &cli.out)?;
            println!("snapshots written to {}", dir.display());
        }
        Command::Rom => {
            let cfg = ExperimentConfig::load(config_path(cli)?, &ov)?;
            let (dir, report) = cmd_rom(&cfg, &cli.out)?;
            for row in &report.sweep {
                println!(
                    "n = {:>3}  max abs error {:.3e}  relative frobenius {:.3e}",
                    row.n_modes, row.max_abs_error, row.frobenius_rel
                );
            }
            println!(
                "reduced march (n = {}, DEIM {:?}) max abs error {:.3e}",
                report.saved_modes, report.deim_points, report.march_max_abs_error
            );
            println!("basis written to {}", dir.display());
        }
        Command::Train => {
            let cfg = ExperimentConfig::load(config_path(cli)?, &ov)?;
            let (dir, s) = cmd_train(&cfg, &cli.out)?;
            println!(
                "{} {} seed {}: {} = {:.4e} after {} epochs",
                s.experiment, s.network, s.seed, s.metric, s.value, s.epochs
            );
            println!("run written to {}", dir.display());
        }
        Command::Reproduce { table } => {
            let id: TableId = table.parse().map_err(CliError::Config)?;
            let cfg = ReproduceConfig::load(config_path(cli)?, &ov)?;
            let (dir, t) = cmd_reproduce(&cfg, id, &cli.out)?;
            for r in &t.comparisons {
                println!("{:<8} {} = {}", r.status(), r.label(), r.outcome);
            }
            println!("tables written to {}", dir.display());
            if t.any_error() {
                return Err(CliError::Numeric("some runs failed; see the marked rows".into()));
            }
        }
        Command::ExportPlots { run_dir } => {
            let dir = cmd_export_plots(run_dir)?;
            println!("plot data written to {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dispinn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
