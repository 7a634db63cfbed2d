use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use fracrl_cli::args::Cli;
use fracrl_cli::{error_code, render::render, run};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(doc) => {
            let text = render(&doc, cli.format);
            let mut out = std::io::stdout().lock();
            if out
                .write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return ExitCode::from(4);
            }
            ExitCode::from(doc.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
