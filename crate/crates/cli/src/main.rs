//! `symrec` command-line driver.

mod args;
mod commands;
mod config;
mod error;
mod output;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn run(cli: &Cli) -> CliResult<()> {
    let file = cli.config.as_deref().map(config::load_file).transpose()?;
    let file = file.as_ref();
    let report = match &cli.command {
        Command::Expand(a) => commands::expand(a, file),
        Command::Bounds(b) => commands::bounds(b, file),
        Command::Pack(a) => commands::pack(a, file),
        Command::Erm(a) => commands::erm(a, file),
        Command::Recover(a) => commands::recover(a, file),
        Command::Probe(a) => commands::probe(a, file),
        Command::FanoSim(a) => commands::fano_sim(a, file),
        Command::Anticonc(a) => commands::anticonc(a, file),
        Command::Teacher(a) => commands::teacher(a, file),
    }?;
    // Reports are written even when an assertion failed.
    for path in report.write(&cli.out_dir, cli.command.name())? {
        println!("{}", path.display());
    }
    println!("{}", serde_json::to_string(&report.summary).unwrap_or_default());
    match report.failure {
        Some(msg) => Err(CliError::Assertion(msg)),
        None => Ok(()),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            std::process::exit(code);
        }
    };
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
