use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use curvlens_cli::{configure_threads, execute, render, Cli, CliResult};

fn run(cli: &Cli, argv: &[String]) -> CliResult<String> {
    configure_threads()?;
    let (report, _) = execute(&cli.global, &cli.command, argv)?;
    render(&report, &cli.global)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    // clap exits with code 2 on usage errors and 0 for --help
    let cli = Cli::parse_from(&argv);
    match run(&cli, &argv) {
        Ok(text) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("curvlens: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
