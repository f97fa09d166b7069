//! Command-line entry point; see `eot_sim::cli`.

fn main() {
    std::process::exit(eot_sim::cli::main_with_args(std::env::args_os()));
}
