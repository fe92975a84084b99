use clap::Parser;

fn main() {
    let cli = momint::cli::Cli::parse();
    std::process::exit(momint::cli::run(cli));
}
