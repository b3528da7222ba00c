use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lear::cli::{error_line, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = match out.is_empty() || out.ends_with('\n') {
                true => write!(stdout, "{out}"),
                false => writeln!(stdout, "{out}"),
            };
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", error_line(&e));
            eprintln!("lear: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
