use std::process::ExitCode;

fn main() -> ExitCode {
    let code = geomark_cli::cli_dispatch(std::env::args());
    ExitCode::from(code as u8)
}
