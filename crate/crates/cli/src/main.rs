use std::process::ExitCode;

fn main() -> ExitCode {
    hilts_cli::main_from_env()
}
