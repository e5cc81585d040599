use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use slt_cli::{run, CliError, CliResult, ExperimentConfig, RunOptions, Subcommand};

/// Runs one simulation experiment and writes `<name>.csv` and `<name>.json`.
#[derive(Debug, Parser)]
#[command(name = "slt", version)]
struct Args {
    /// simulate, intensity, crossings, theorem1, rates, piling, besq,
    /// specfun-check, passage, restricted or scaling
    subcommand: String,
    /// key=value configuration file; omitted keys take the subcommand's defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides `threads` and SLT_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    /// Write measured run times into CSV timing columns
    #[arg(long)]
    timing: bool,
}

fn load(args: &Args) -> CliResult<(Subcommand, ExperimentConfig)> {
    let cmd: Subcommand = args.subcommand.parse()?;
    let mut cfg = ExperimentConfig::preset(cmd);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        cfg = cfg.apply_text(&text)?;
    }
    if let Ok(v) = std::env::var("SLT_THREADS") {
        cfg.threads = v.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "SLT_THREADS must be a non-negative integer, got {v:?}"
            ))
        })?;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    Ok((cmd, cfg))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = load(&args).and_then(|(cmd, cfg)| {
        run(
            cmd,
            &cfg,
            RunOptions {
                timing: args.timing,
            },
        )
    });
    match outcome {
        Ok(report) => {
            for c in &report.summary.checks {
                println!(
                    "{} {}: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            println!(
                "wrote {} and {}",
                report.csv_path.display(),
                report.json_path.display()
            );
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
