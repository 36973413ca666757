use clap::Parser;

fn main() {
    let cli = paraweight_cli::Cli::parse();
    std::process::exit(paraweight_cli::run(&cli));
}
