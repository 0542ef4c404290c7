use clap::Parser;
use prdkit::cli::{configure_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|_| run(cli)) {
        eprintln!("prdkit: {e}");
        std::process::exit(e.exit_code());
    }
}
