//! `corrgen`: command-line front end for corrgen-core.
//!
//! Every command writes one JSON report (or its text rendering). Exit codes:
//! 0 on success, 1 on input errors, 2 when `check`/`pipeline` rule the seed
//! out or `verify` rejects the factorization, 3 when `pipeline` finds no
//! factorization.

mod args;
mod commands;
mod render;

use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command, Format, OutputArgs};

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("CORRGEN_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("CORRGEN_THREADS must be a positive integer, got {raw:?}"))?;
        if n == 0 {
            anyhow::bail!("CORRGEN_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn output_of(command: &Command) -> &OutputArgs {
    match command {
        Command::Check(a) => &a.output,
        Command::Factorize(a) => &a.output,
        Command::Verify(a) => &a.output,
        Command::Simulate(a) => &a.output,
        Command::Classical(a) => &a.output,
        Command::Reduce(a) => &a.output,
        Command::LambdaCandidates(a) => &a.output,
        Command::Pipeline(a) => &a.output,
    }
}

fn run(cli: &Cli) -> Result<i32> {
    configure_threads()?;
    let report = match &cli.command {
        Command::Check(a) => commands::check(a)?,
        Command::Factorize(a) => commands::factorize(a)?,
        Command::Verify(a) => commands::verify_cmd(a)?,
        Command::Simulate(a) => commands::simulate(a)?,
        Command::Classical(a) => commands::classical(a)?,
        Command::Reduce(a) => commands::reduce(a)?,
        Command::LambdaCandidates(a) => commands::lambda_candidates(a)?,
        Command::Pipeline(a) => commands::pipeline(a)?,
    };
    let value = render::round_numbers(report.value);
    let output = output_of(&cli.command);
    let body = match output.format {
        Format::Json => serde_json::to_string_pretty(&value)? + "\n",
        Format::Text => render::text(&value),
    };
    // the report is complete before anything is written
    match &output.out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(report.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
