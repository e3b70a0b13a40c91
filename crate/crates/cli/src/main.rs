//! Command-line front end: parses a JSON problem definition, dispatches
//! to the library, and emits deterministic CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

mod config;
mod exec;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{parse_config, OutputFormat};
use exec::RunError;

#[derive(Parser, Debug)]
#[command(
    name = "selfadj",
    about = "Self-adjoint extensions of 1D operators from unitary boundary data",
    long_about = None
)]
struct Cli {
    /// Path to the JSON problem definition.
    #[arg(long, conflicts_with = "stdin")]
    config: Option<PathBuf>,

    /// Read the problem definition from standard input.
    #[arg(long)]
    stdin: bool,

    /// Write the artifact to this path (atomically); overrides the config.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Output format, csv or json; overrides the config.
    #[arg(long)]
    format: Option<String>,

    /// Seed for the randomized samplings of check-style commands.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Worker threads (accepted for compatibility; computation is
    /// single-threaded at desk scale).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn run(cli: &Cli) -> Result<(), RunError> {
    if cli.threads == 0 {
        return Err(RunError::Validation("--threads must be >= 1".to_string()));
    }
    let text = if cli.stdin {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| RunError::Validation(format!("reading stdin: {e}")))?;
        buf
    } else {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| RunError::Validation("either --config or --stdin is required".into()))?;
        std::fs::read_to_string(path)
            .map_err(|e| RunError::Validation(format!("reading {}: {e}", path.display())))?
    };

    let parsed = parse_config(&text)?;
    let format = match &cli.format {
        Some(f) => OutputFormat::parse(f)?,
        None => parsed.output.format,
    };
    let artifact = exec::run(&parsed.command, format, cli.seed)?;

    let target = cli
        .output
        .clone()
        .or_else(|| parsed.output.path.as_ref().map(PathBuf::from));
    match &target {
        Some(path) => write_atomic(path, artifact.as_bytes())
            .map_err(|e| RunError::Numerical(format!("writing {}: {e}", path.display())))?,
        None => print!("{artifact}"),
    }
    eprintln!(
        "{}: ok, {} bytes to {}",
        parsed.command.name(),
        artifact.len(),
        target
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "stdout".to_string())
    );
    Ok(())
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("output path has no file name"))?;
    let tmp_name = format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    );
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp_path, bytes)?;
    std::fs::rename(&tmp_path, path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
