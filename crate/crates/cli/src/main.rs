use std::process::ExitCode;

use clap::Parser;

use bbspike_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
