use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qamgame::cli::run(std::env::args_os()))
}
