use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which this tool reserves for infeasible specs.
    let cli = match gime_cli::args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                gime_cli::EXIT_FAILURE
            } else {
                gime_cli::EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match gime_cli::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("gime: {e:#}");
            ExitCode::from(gime_cli::exit_code(&e))
        }
    }
}
