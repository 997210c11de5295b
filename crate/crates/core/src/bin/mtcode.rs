use clap::Parser;
use mtcode::cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    let code = run(Cli::parse());
    std::process::exit(code);
}
