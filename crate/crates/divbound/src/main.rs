use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use divbound::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|outcome| Ok((outcome.code, outcome.commit()?)));
    match result {
        Ok((code, stdout)) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(stdout.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("divbound: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
