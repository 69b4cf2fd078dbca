use std::process::ExitCode;

use riesz_lab::cli;

fn main() -> ExitCode {
    if let Err(e) = cli::init_threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(cli::EXIT_CONFIG as u8);
    }
    let code = cli::main_with_args(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
