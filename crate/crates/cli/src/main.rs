use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lhskit::app::{run, Cli};
use lhskit::CliError;

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("LHSKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config("LHSKIT_THREADS", format!("expected a positive integer, got '{v}'")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config("LHSKIT_THREADS", e))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            context: format!("writing {}", path.display()),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                context: "writing stdout".into(),
                source,
            }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| {
        let outcome = run(&cli)?;
        emit(&cli, &outcome.text)?;
        Ok(outcome.exit_code())
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("lhskit: {e}");
            ExitCode::from(2)
        }
    }
}
