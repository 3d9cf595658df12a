use clap::Parser;

fn main() {
    let cli = bgsched_cli::args::Cli::parse();
    std::process::exit(bgsched_cli::run(cli));
}
