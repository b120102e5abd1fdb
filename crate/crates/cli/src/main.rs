use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ado3d_cli::main_with_args(std::env::args().collect()))
}
