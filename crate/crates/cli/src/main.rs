use std::process::ExitCode;

fn main() -> ExitCode {
    bitr_cli::run(std::env::args_os())
}
