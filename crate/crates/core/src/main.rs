use clap::Parser;
use openkrylov::cli::{error_json, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            std::process::exit(e.exit_code());
        }
    }
}
