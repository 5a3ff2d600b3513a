use clap::Parser;

fn main() {
    let cli = hedgebench::cli::Cli::parse();
    if let Err(err) = hedgebench::cli::run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
