use clap::Parser;

fn main() {
    let cli = pmlsh_cli::Cli::parse();
    if let Err(e) = pmlsh_cli::run(&cli) {
        eprintln!("pmlsh: {e}");
        std::process::exit(e.exit_code());
    }
}
