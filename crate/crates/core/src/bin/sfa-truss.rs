use std::process::ExitCode;

fn main() -> ExitCode {
    sfa_truss::cli::main_with(std::env::args_os())
}
