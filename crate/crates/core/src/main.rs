use std::process::ExitCode;

fn main() -> ExitCode {
    smilewings::cli::main_entry(std::env::args_os())
}
