use std::process::ExitCode;

fn main() -> ExitCode {
    provision_cli::run(std::env::args_os())
}
