mod args;
mod commands;
mod error;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, FingerprintCommand};
use commands::{denoise, fingerprint, losscheck, matching, roc, simulate};
use error::{CliError, CliResult};

fn output(path: Option<&std::path::Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fingerprint(FingerprintCommand::Build(a)) => {
            fingerprint::build(&a)?;
        }
        Command::Fingerprint(FingerprintCommand::Quantize(a)) => {
            fingerprint::quantize_cmd(&a)?;
        }
        Command::Match(a) => {
            let records = matching::run_match(&a)?;
            let mut out = output(a.out.as_deref())?;
            matching::write_report(&records, a.format, &mut out)?;
            out.flush()?;
        }
        Command::Roc(a) => {
            let summary = roc::run_roc(&a)?;
            let mut out = output(None)?;
            roc::write_roc(&summary, a.format, &mut out)?;
            out.flush()?;
        }
        Command::Simulate(a) => {
            simulate::simulate(&a)?;
        }
        Command::Losscheck(a) => {
            let report = losscheck::run_losscheck(&a)?;
            let mut out = output(None)?;
            losscheck::write_losscheck(&report, a.format, &mut out)?;
            out.flush()?;
            if !report.passed {
                return Err(CliError::check("gradient check exceeded tolerance"));
            }
        }
        Command::Denoise(a) => denoise::run_denoise(&a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
