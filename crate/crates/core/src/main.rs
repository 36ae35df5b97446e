use clap::Parser;

fn main() {
    let args = impactopt::cli::Args::parse();
    std::process::exit(impactopt::cli::main_with_args(args));
}
