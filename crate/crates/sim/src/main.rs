use std::process::ExitCode;

fn main() -> ExitCode {
    eqml_sim::cli::run()
}
