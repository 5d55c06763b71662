mod args;
mod commands;

use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn run(cli: Cli) -> anyhow::Result<bool> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let passed = match cli.command {
        Command::Lemma2(a) => commands::lemma2(a, &mut out),
        Command::Lemma3(a) => commands::lemma3(a, &mut out),
        Command::Pmf(a) => commands::pmf(a, &mut out),
        Command::Sample(a) => commands::sample(a, &mut out),
        Command::Normalize(a) => commands::normalize(a, &mut out),
        Command::Verify(a) => commands::verify(a, &mut out),
        Command::Table(a) => commands::table(a, &mut out),
        Command::Figure(a) => commands::figure(a, &mut out),
    }?;
    out.flush()?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
