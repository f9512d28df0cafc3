use std::process::ExitCode;

fn main() -> ExitCode {
    dsr::cli::main()
}
