//! Experiment driver: configuration, deterministic replication and CSV/JSON
//! output for the simulation checks built on `slt-core`.

pub mod config;
pub mod error;
mod experiments;
pub mod output;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

pub use config::{parse_config, ExperimentConfig, KernelChoice};
pub use error::{CliError, CliResult};
pub use output::{Check, Csv, Outcome, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subcommand {
    Simulate,
    Intensity,
    Crossings,
    Theorem1,
    Rates,
    Piling,
    Besq,
    SpecfunCheck,
    Passage,
    Restricted,
    Scaling,
}

impl Subcommand {
    pub const ALL: [Subcommand; 11] = [
        Subcommand::Simulate,
        Subcommand::Intensity,
        Subcommand::Crossings,
        Subcommand::Theorem1,
        Subcommand::Rates,
        Subcommand::Piling,
        Subcommand::Besq,
        Subcommand::SpecfunCheck,
        Subcommand::Passage,
        Subcommand::Restricted,
        Subcommand::Scaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Intensity => "intensity",
            Subcommand::Crossings => "crossings",
            Subcommand::Theorem1 => "theorem1",
            Subcommand::Rates => "rates",
            Subcommand::Piling => "piling",
            Subcommand::Besq => "besq",
            Subcommand::SpecfunCheck => "specfun-check",
            Subcommand::Passage => "passage",
            Subcommand::Restricted => "restricted",
            Subcommand::Scaling => "scaling",
        }
    }

    /// Base name of the CSV and JSON outputs.
    pub fn file_stem(self) -> &'static str {
        match self {
            Subcommand::SpecfunCheck => "specfun",
            other => other.name(),
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown subcommand {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Write measured run times instead of 0 in CSV timing columns.
    pub timing: bool,
}

/// Runs one experiment without touching the filesystem.
pub fn execute(cmd: Subcommand, cfg: &ExperimentConfig, opts: RunOptions) -> CliResult<Outcome> {
    use experiments::*;
    match cmd {
        Subcommand::Simulate => paths::simulate(cfg),
        Subcommand::Intensity => paths::intensity(cfg),
        Subcommand::Crossings => paths::crossings(cfg),
        Subcommand::Piling => paths::piling(cfg),
        Subcommand::Theorem1 => localtime::theorem1(cfg, opts),
        Subcommand::Rates => localtime::rates(cfg),
        Subcommand::Passage => localtime::passage(cfg),
        Subcommand::Scaling => localtime::scaling(cfg),
        Subcommand::Besq => analytic::besq(cfg),
        Subcommand::SpecfunCheck => analytic::specfun_check(cfg),
        Subcommand::Restricted => restricted::restricted(cfg),
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

impl RunReport {
    /// 0 when every check passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.pass {
            0
        } else {
            2
        }
    }
}

/// Runs one experiment and writes `<stem>.csv`, `<stem>.json` and any
/// extra artifacts into `cfg.out`.
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig, opts: RunOptions) -> CliResult<RunReport> {
    let start = Instant::now();
    let outcome = execute(cmd, cfg, opts)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(&cfg.out)?;
    let csv_name = format!("{}.csv", cmd.file_stem());
    let csv_path = cfg.out.join(&csv_name);
    std::fs::write(&csv_path, outcome.csv.text())?;
    for (name, bytes) in &outcome.extra_files {
        std::fs::write(cfg.out.join(name), bytes)?;
    }
    let summary = Summary {
        subcommand: cmd.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        csv: csv_name,
        csv_rows: outcome.csv.rows(),
        metrics: outcome.metrics,
        pass: outcome.checks.iter().all(|c| c.pass),
        checks: outcome.checks,
        wall_time_s,
    };
    let json_path = cfg.out.join(format!("{}.json", cmd.file_stem()));
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&json_path, json + "\n")?;
    Ok(RunReport {
        summary,
        csv_path,
        json_path,
    })
}
