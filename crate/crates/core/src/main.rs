use clap::Parser;

use memstep::cli::{execute, exit_code, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = execute(&cli, &mut std::io::stdout()) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
