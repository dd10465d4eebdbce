use std::process::ExitCode;

fn main() -> ExitCode {
    ricci_entropy::cli::run(std::env::args_os())
}
