use clap::Parser;

fn main() {
    let cli = hptowec::Cli::parse();
    if let Err(e) = hptowec::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
