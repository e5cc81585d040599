//! Experiment configuration: `key=value` lines with `#` comments.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use slt_core::marks::MarkKernel;
use slt_core::stablepath::{PathSpec, SmallJumpMode, StableParams};

use crate::error::{CliError, CliResult};
use crate::Subcommand;

/// Mark kernel family; its resolution is `mark_resolution`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    Hat,
    Besq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub a: f64,
    /// Time horizon T.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub eps: f64,
    pub dt: f64,
    pub small_jumps: SmallJumpMode,
    pub bandwidth: f64,
    /// Single level for crossings and rates.
    pub level: f64,
    pub level_min: f64,
    pub level_max: f64,
    pub level_step: f64,
    pub time_step: f64,
    pub h0: f64,
    pub h_factor: f64,
    pub h_count: usize,
    pub kernel: KernelChoice,
    pub mark_resolution: usize,
    pub b: f64,
    pub q_list: Vec<f64>,
    /// Moment order for increment scaling and the Hölder moment.
    pub p: f64,
    pub holder_gamma: f64,
    pub besq_dim: f64,
    pub draws: usize,
    pub sep_min: f64,
    pub sep_factor: f64,
    pub sep_count: usize,
    pub pair_center: f64,
    pub shortcut_depth: f64,
    pub restricted_horizon: f64,
    pub fit_k_min: usize,
    pub seed: u64,
    pub replicas: usize,
    /// 0 lets the pool pick.
    pub threads: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            a: 1.0,
            horizon: 1.0,
            eps: 1e-3,
            dt: 0.01,
            small_jumps: SmallJumpMode::DriftOnly,
            bandwidth: 0.02,
            level: 0.3,
            level_min: -1.0,
            level_max: 1.0,
            level_step: 0.05,
            time_step: 0.1,
            h0: 0.2,
            h_factor: 0.5,
            h_count: 6,
            kernel: KernelChoice::Hat,
            mark_resolution: 3,
            b: 1.0,
            q_list: vec![1.0],
            p: 2.0,
            holder_gamma: 0.2,
            besq_dim: 5.0,
            draws: 100_000,
            sep_min: 0.02,
            sep_factor: 2.0,
            sep_count: 6,
            pair_center: -0.25,
            shortcut_depth: 0.05,
            restricted_horizon: 100.0,
            fit_k_min: 5,
            seed: 1,
            replicas: 100,
            threads: 0,
            out: PathBuf::from("."),
        }
    }
}

/// Every key in serialization order.
pub const KEYS: &[&str] = &[
    "alpha",
    "a",
    "T",
    "eps",
    "dt",
    "small_jumps",
    "bandwidth",
    "level",
    "level_min",
    "level_max",
    "level_step",
    "time_step",
    "h0",
    "h_factor",
    "h_count",
    "kernel",
    "mark_resolution",
    "b",
    "q_list",
    "p",
    "holder_gamma",
    "besq_dim",
    "draws",
    "sep_min",
    "sep_factor",
    "sep_count",
    "pair_center",
    "shortcut_depth",
    "restricted_horizon",
    "fit_k_min",
    "seed",
    "replicas",
    "threads",
    "out",
];

fn num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

fn real(v: &str) -> Result<f64, String> {
    let x: f64 = num(v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{v:?} is not finite"))
    }
}

fn positive(v: &str) -> Result<f64, String> {
    let x = real(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be > 0, got {x}"))
    }
}

fn at_least(v: &str, min: usize) -> Result<usize, String> {
    let n: usize = num(v)?;
    if n >= min {
        Ok(n)
    } else {
        Err(format!("must be >= {min}, got {n}"))
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Defaults sized for one subcommand's experiment.
    pub fn preset(cmd: Subcommand) -> Self {
        let base = Self::default();
        match cmd {
            Subcommand::Intensity => Self {
                horizon: 10.0,
                replicas: 50,
                ..base
            },
            Subcommand::Crossings => Self {
                horizon: 100.0,
                replicas: 40,
                ..base
            },
            Subcommand::Rates => Self {
                horizon: 3000.0,
                replicas: 40,
                level: -0.2,
                bandwidth: 0.01,
                h0: 0.08,
                h_count: 5,
                ..base
            },
            Subcommand::Piling => Self {
                horizon: 12.0,
                replicas: 1,
                ..base
            },
            Subcommand::Besq => Self {
                replicas: 10_000,
                mark_resolution: 1000,
                p: 8.0,
                ..base
            },
            Subcommand::Passage => Self {
                replicas: 40_000,
                bandwidth: 0.004,
                small_jumps: SmallJumpMode::Gaussian,
                ..base
            },
            Subcommand::Restricted => Self {
                replicas: 10_000,
                bandwidth: 0.01,
                q_list: vec![0.5, 1.0, 2.0],
                ..base
            },
            Subcommand::Scaling => Self {
                replicas: 10_000,
                bandwidth: 0.004,
                ..base
            },
            Subcommand::Simulate | Subcommand::Theorem1 | Subcommand::SpecfunCheck => base,
        }
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "alpha" => {
                let x = real(v)?;
                if !(x > 0.0 && x < 1.0) {
                    return Err(format!("alpha must lie in (0,1), got {x}"));
                }
                self.alpha = x;
            }
            "a" => self.a = positive(v)?,
            "T" => {
                let x = real(v)?;
                if x < 0.0 {
                    return Err(format!("must be >= 0, got {x}"));
                }
                self.horizon = x;
            }
            "eps" => self.eps = positive(v)?,
            "dt" => self.dt = positive(v)?,
            "small_jumps" => {
                self.small_jumps = match v {
                    "drift" => SmallJumpMode::DriftOnly,
                    "gaussian" => SmallJumpMode::Gaussian,
                    _ => return Err(format!("expected drift or gaussian, got {v:?}")),
                }
            }
            "bandwidth" => self.bandwidth = positive(v)?,
            "level" => self.level = real(v)?,
            "level_min" => self.level_min = real(v)?,
            "level_max" => self.level_max = real(v)?,
            "level_step" => self.level_step = positive(v)?,
            "time_step" => self.time_step = positive(v)?,
            "h0" => self.h0 = positive(v)?,
            "h_factor" => {
                let x = real(v)?;
                if !(x > 0.0 && x < 1.0) {
                    return Err(format!("must lie in (0,1), got {x}"));
                }
                self.h_factor = x;
            }
            "h_count" => self.h_count = at_least(v, 1)?,
            "kernel" => {
                self.kernel = match v {
                    "hat" => KernelChoice::Hat,
                    "besq" => KernelChoice::Besq,
                    _ => return Err(format!("expected hat or besq, got {v:?}")),
                }
            }
            "mark_resolution" => self.mark_resolution = at_least(v, 2)?,
            "b" => self.b = positive(v)?,
            "q_list" => {
                let qs = v
                    .split(',')
                    .map(|s| real(s.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                if qs.is_empty() || qs.iter().any(|&q| q < 0.0) {
                    return Err("needs one or more values >= 0".into());
                }
                self.q_list = qs;
            }
            "p" => {
                let x = real(v)?;
                if x < 1.0 {
                    return Err(format!("must be >= 1, got {x}"));
                }
                self.p = x;
            }
            "holder_gamma" => self.holder_gamma = positive(v)?,
            "besq_dim" => {
                let x = real(v)?;
                if x < 0.0 {
                    return Err(format!("must be >= 0, got {x}"));
                }
                self.besq_dim = x;
            }
            "draws" => self.draws = at_least(v, 2)?,
            "sep_min" => self.sep_min = positive(v)?,
            "sep_factor" => {
                let x = real(v)?;
                if x <= 1.0 {
                    return Err(format!("must be > 1, got {x}"));
                }
                self.sep_factor = x;
            }
            "sep_count" => self.sep_count = at_least(v, 3)?,
            "pair_center" => self.pair_center = real(v)?,
            "shortcut_depth" => self.shortcut_depth = positive(v)?,
            "restricted_horizon" => self.restricted_horizon = positive(v)?,
            "fit_k_min" => self.fit_k_min = at_least(v, 1)?,
            "seed" => self.seed = num(v)?,
            "replicas" => self.replicas = at_least(v, 1)?,
            "threads" => self.threads = num(v)?,
            "out" => {
                if v.is_empty() {
                    return Err("output directory must be non-empty".into());
                }
                self.out = PathBuf::from(v);
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "alpha" => format!("{:?}", self.alpha),
            "a" => format!("{:?}", self.a),
            "T" => format!("{:?}", self.horizon),
            "eps" => format!("{:?}", self.eps),
            "dt" => format!("{:?}", self.dt),
            "small_jumps" => match self.small_jumps {
                SmallJumpMode::DriftOnly => "drift".into(),
                SmallJumpMode::Gaussian => "gaussian".into(),
            },
            "bandwidth" => format!("{:?}", self.bandwidth),
            "level" => format!("{:?}", self.level),
            "level_min" => format!("{:?}", self.level_min),
            "level_max" => format!("{:?}", self.level_max),
            "level_step" => format!("{:?}", self.level_step),
            "time_step" => format!("{:?}", self.time_step),
            "h0" => format!("{:?}", self.h0),
            "h_factor" => format!("{:?}", self.h_factor),
            "h_count" => self.h_count.to_string(),
            "kernel" => match self.kernel {
                KernelChoice::Hat => "hat".into(),
                KernelChoice::Besq => "besq".into(),
            },
            "mark_resolution" => self.mark_resolution.to_string(),
            "b" => format!("{:?}", self.b),
            "q_list" => fmt_list(&self.q_list),
            "p" => format!("{:?}", self.p),
            "holder_gamma" => format!("{:?}", self.holder_gamma),
            "besq_dim" => format!("{:?}", self.besq_dim),
            "draws" => self.draws.to_string(),
            "sep_min" => format!("{:?}", self.sep_min),
            "sep_factor" => format!("{:?}", self.sep_factor),
            "sep_count" => self.sep_count.to_string(),
            "pair_center" => format!("{:?}", self.pair_center),
            "shortcut_depth" => format!("{:?}", self.shortcut_depth),
            "restricted_horizon" => format!("{:?}", self.restricted_horizon),
            "fit_k_min" => self.fit_k_min.to_string(),
            "seed" => self.seed.to_string(),
            "replicas" => self.replicas.to_string(),
            "threads" => self.threads.to_string(),
            "out" => self.out.display().to_string(),
            _ => unreachable!("key table and getter disagree on {key}"),
        }
    }

    /// Cross-field checks; `line_of` names the offending line when known.
    fn check_relations(&self, line_of: &HashMap<&str, usize>) -> CliResult<()> {
        let fail = |keys: &[&str], msg: String| {
            let line = keys
                .iter()
                .filter_map(|k| line_of.get(k))
                .max()
                .copied()
                .unwrap_or(0);
            Err(CliError::Config { line, msg })
        };
        if self.level_min > self.level_max {
            return fail(
                &["level_min", "level_max"],
                format!(
                    "level_min {} exceeds level_max {}",
                    self.level_min, self.level_max
                ),
            );
        }
        Ok(())
    }

    /// Applies the lines of `text` on top of `self`.
    pub fn apply_text(mut self, text: &str) -> CliResult<Self> {
        let mut line_of: HashMap<&str, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(CliError::Config {
                    line,
                    msg: format!("expected key=value, got {content:?}"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            let key = KEYS
                .iter()
                .copied()
                .find(|&known| known == k)
                .ok_or_else(|| CliError::Config {
                    line,
                    msg: format!("unknown key {k:?}"),
                })?;
            if line_of.insert(key, line).is_some() {
                return Err(CliError::Config {
                    line,
                    msg: format!("duplicate key {key:?}"),
                });
            }
            self.set(key, v).map_err(|msg| CliError::Config {
                line,
                msg: format!("{key}: {msg}"),
            })?;
        }
        self.check_relations(&line_of)?;
        Ok(self)
    }

    /// Every key, one per line, in a form [`parse_config`] reads back exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            writeln!(s, "{key}={}", self.get(key)).expect("write to string");
        }
        s
    }

    pub fn params(&self) -> CliResult<StableParams> {
        Ok(StableParams::new(self.alpha, self.a)?)
    }

    pub fn path_spec(&self) -> CliResult<PathSpec> {
        Ok(PathSpec::new(
            self.params()?,
            self.eps,
            self.dt,
            self.small_jumps,
        )?)
    }

    /// h0·factor^k for k < h_count.
    pub fn h_list(&self) -> Vec<f64> {
        (0..self.h_count)
            .map(|k| self.h0 * self.h_factor.powi(k as i32))
            .collect()
    }

    /// sep_min·factor^k for k < sep_count.
    pub fn separations(&self) -> Vec<f64> {
        (0..self.sep_count)
            .map(|k| self.sep_min * self.sep_factor.powi(k as i32))
            .collect()
    }

    pub fn level_grid(&self) -> Vec<f64> {
        let n = ((self.level_max - self.level_min) / self.level_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| self.level_min + k as f64 * self.level_step)
            .collect()
    }

    /// 0, time_step, … up to T, with T itself as the last point.
    pub fn time_grid(&self) -> Vec<f64> {
        let n = (self.horizon / self.time_step - 1e-9).ceil().max(0.0) as usize;
        let mut g: Vec<f64> = (0..n).map(|k| k as f64 * self.time_step).collect();
        g.push(self.horizon);
        g
    }

    pub fn kernel(&self) -> CliResult<MarkKernel> {
        Ok(match self.kernel {
            KernelChoice::Hat => MarkKernel::hat(self.mark_resolution)?,
            KernelChoice::Besq => MarkKernel::besq_exc(self.alpha, self.mark_resolution)?,
        })
    }
}

/// Parses `text` over the global defaults.
pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    ExperimentConfig::default().apply_text(text)
}
