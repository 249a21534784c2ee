use clap::Parser;
use regret_design::{execute, Cli};

fn main() {
    let cfg = Cli::parse().into_run_config();
    if let Err(e) = execute(&cfg) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
