mod config;
mod csv;
mod error;
mod scenarios;
mod svg;

use clap::error::ErrorKind;
use clap::Parser;
use error::CliError;
use scenarios::Scenario;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exact and numerical solver for the dissipative SSH chain.
///
/// Exit status: 0 on success, 1 for configuration or I/O errors, 2 for physics errors.
#[derive(Debug, Parser)]
#[command(name = "lskin", version)]
struct Cli {
    #[command(subcommand)]
    scenario: Scenario,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving the CSV (and SVG) files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Also render an SVG plot next to each CSV file.
    #[arg(long, global = true)]
    svg: bool,
    /// Worker threads for sweeps; falls back to LSKIN_WORKERS.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let count = match flag {
        Some(k) => Some(k),
        None => match std::env::var("LSKIN_WORKERS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| CliError::Parse(format!("LSKIN_WORKERS: expected a positive integer, got '{v}'")))?),
            Err(_) => None,
        },
    };
    if count == Some(0) {
        return Err(CliError::Parse("worker count must be positive".into()));
    }
    Ok(count)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Parse("missing --config <path>".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = config::parse_config(&text)?;
    let name = cli.scenario.name();
    if let Some(s) = &cfg.scenario {
        if s != name {
            return Err(CliError::Parse(format!("configuration is for scenario '{s}', not '{name}'")));
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = worker_count(cli.workers)? {
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Parse(format!("worker pool: {e}")))?;
    let report = pool.install(|| scenarios::run(cli.scenario, &cfg))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    let stem = cfg.output.as_deref().unwrap_or(name);
    for out in &report.outputs {
        let csv_text = out.table.render();
        write(&cli.out.join(format!("{stem}{}.csv", out.suffix)), &csv_text)?;
        if let (true, Some(plot)) = (cli.svg, &out.plot) {
            write(&cli.out.join(format!("{stem}{}.svg", out.suffix)), &svg::render_svg(&csv_text, plot)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
