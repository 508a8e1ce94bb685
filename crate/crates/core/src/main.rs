use std::process::ExitCode;

fn main() -> ExitCode {
    boomsim::cli::main_with_args(std::env::args_os())
}
