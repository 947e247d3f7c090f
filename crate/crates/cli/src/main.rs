use clap::Parser;

fn main() {
    std::process::exit(kerrcat_cli::main_with(kerrcat_cli::Cli::parse()));
}
