use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use citadel_cli::{error_document, execute, success_document, Cli, CliError};
use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use serde_json::Value;

fn print(doc: &Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, doc).context("writing output")?;
    writeln!(out).context("writing output")?;
    Ok(())
}

fn run() -> anyhow::Result<u8> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => {
            e.print().context("printing help")?;
            return Ok(0);
        }
        Err(e) => {
            let err = CliError::usage("usage", e.kind());
            eprint!("{e}");
            print(&error_document(None, &err))?;
            return Ok(err.exit_code());
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CITADEL_LOG", level)).init();

    let name = cli.command.name();
    match execute(&cli) {
        Ok(result) => {
            print(&success_document(name, result))?;
            Ok(0)
        }
        Err(err) => {
            eprintln!("citadel {name}: {err}");
            print(&error_document(Some(name), &err))?;
            Ok(err.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("citadel: {e:#}");
            ExitCode::from(1)
        }
    }
}
