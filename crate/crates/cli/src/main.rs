use clap::Parser;
use nlbs_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("nlbs: {e}");
        std::process::exit(e.exit_code());
    }
}
