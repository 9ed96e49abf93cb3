use clap::Parser;
use maxmargin::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
