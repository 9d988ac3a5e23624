use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use syspred_cli::{init_threads, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let msg = e.render().to_string();
            let msg = msg.trim_start_matches("error: ").trim_end();
            eprintln!("usage: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = init_threads(cli.threads).and_then(|_| run(&cli)) {
        eprintln!("{e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    ExitCode::SUCCESS
}
