use clap::Parser;

use gr_core::cli::{self, Cli};

fn main() {
    match cli::run(Cli::parse()) {
        Ok(out) => print!("{out}"),
        Err(f) => {
            print!("{}", f.output);
            eprintln!("error: {}", f.error);
            std::process::exit(f.error.code());
        }
    }
}
