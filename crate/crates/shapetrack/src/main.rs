use std::process::ExitCode;

use shapetrack::cli::{execute, parse_args, UsageError};

fn configure_threads() -> Result<(), UsageError> {
    let Ok(value) = std::env::var("SHAPETRACK_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| UsageError(format!("SHAPETRACK_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cmd = match configure_threads().and_then(|()| parse_args(std::env::args_os())) {
        Ok(cmd) => cmd,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
