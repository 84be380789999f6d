use clap::Parser;

fn main() {
    let cli = distcert_cli::Cli::parse();
    std::process::exit(distcert_cli::run(cli));
}
