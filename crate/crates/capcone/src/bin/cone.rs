//! `cone` command-line entry point.

fn main() {
    std::process::exit(capcone::cli::run(std::env::args_os()));
}
