//! Benchmark harness around the `pmlsh` engines: builds indexes, runs
//! nearest-neighbor and closest-pair experiments over parameter grids,
//! scores them against exact answers, and writes JSON (and CSV) reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::io::Write;

pub use args::{Cli, Command};
pub use commands::{cmd_ann, cmd_bc, cmd_build, cmd_calibrate, cmd_cp, cmd_oracle};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use report::RunReport;

pub fn execute(command: &Command, cfg: &RunConfig) -> CliResult<RunReport> {
    match command {
        Command::Build(_) => cmd_build(cfg),
        Command::Ann(_) => cmd_ann(cfg),
        Command::Bc(_) => cmd_bc(cfg),
        Command::Cp(_) => cmd_cp(cfg),
        Command::Oracle(_) => cmd_oracle(cfg),
        Command::Calibrate(_) => cmd_calibrate(cfg),
    }
}

/// Parses the configuration, runs the command and writes its outputs.
pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = cli.command.args().to_config()?;
    let report = execute(&cli.command, &cfg)?;
    let json = report.to_json();
    match &cfg.out {
        Some(path) => std::fs::write(path, json + "\n")
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?,
        None => writeln!(std::io::stdout(), "{json}")?,
    }
    if let Some(path) = &cfg.csv {
        report.write_csv(path)?;
    }
    Ok(())
}
