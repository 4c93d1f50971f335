use clap::Parser;

use quadhpm::cli::{run, RunConfig};

fn main() {
    let config = RunConfig::parse();
    let out = run(&config);
    print!("{}", out.report);
    if let Some(msg) = out.message {
        eprintln!("error: {msg}");
    }
    std::process::exit(out.status);
}
