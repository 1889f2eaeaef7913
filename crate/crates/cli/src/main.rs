use clap::Parser;

fn main() {
    let cli = structeval_cli::Cli::parse();
    if let Err(e) = structeval_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
