use clap::Parser;
use entanglemeter_cli::config::RunConfig;
use entanglemeter_cli::{init_threads, run};

fn main() {
    let config = RunConfig::parse();
    init_threads();
    if let Err(e) = run::run(&config) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
