use std::process::ExitCode;

fn main() -> ExitCode {
    oupexit_cli::run(std::env::args_os())
}
