use std::process::ExitCode;

fn main() -> ExitCode {
    twolocus_cli::run_main()
}
