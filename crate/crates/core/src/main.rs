use clap::Parser;

fn main() {
    std::process::exit(tatl::cli::run(tatl::cli::Cli::parse()));
}
