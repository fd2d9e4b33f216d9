use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tentspace::suite::{parse_ladder, run_suite, write_outputs, OutputFormat, SuiteConfig};
use tentspace::verify::Resolution;

/// Runs a suite of weighted tent-space checks and writes a JSON report and CSV summary.
#[derive(Parser, Debug)]
#[command(name = "tentcheck", version)]
struct Cli {
    /// Suite configuration (TOML).
    config: PathBuf,
    /// Overrides the suite seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the global ladder, e.g. `128x16,256x32`.
    #[arg(long, value_parser = parse_ladder)]
    resolution_ladder: Option<Vec<Resolution>>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Records a timestamp and per-check runtimes (output is no longer reproducible).
    #[arg(long)]
    timestamps: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

const CONFIG_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CONFIG_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut config = match SuiteConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(l) = cli.resolution_ladder {
        config.ladder = l;
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("--jobs must be positive");
            return ExitCode::from(CONFIG_ERROR);
        }
        config.jobs = Some(j);
    }
    if let Some(f) = cli.format {
        config.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Both => OutputFormat::Both,
        };
    }
    if let Some(o) = cli.output {
        config.output = o;
    }
    config.timestamps |= cli.timestamps;

    let report = run_suite(&config);
    for c in &report.checks {
        println!("{:<32} {:<22} {}", c.name, c.check, c.verdict);
    }
    if let Err(e) = write_outputs(&report, &config) {
        eprintln!("writing {}: {e}", config.output.display());
        return ExitCode::FAILURE;
    }
    if report.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
