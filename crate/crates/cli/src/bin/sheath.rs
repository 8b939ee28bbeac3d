use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(sheath_cli::cli::run_cli(std::env::args()) as u8)
}
