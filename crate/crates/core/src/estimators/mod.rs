//! Crossing statistics at fixed levels and the three count-based local-time
//! estimators: mark threshold, corridor and jump size.

mod stats;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::marks::{eval_mark, MarkPath};
use crate::sampling::{replicate, RngStream};
use crate::stablepath::{
    occupation_from_steps, JumpEvent, LocalTimeField, PathSkeleton, PathSpec, PathStream,
};

pub use stats::{
    kolmogorov_sf, ks_two_sample, ks_uniform, mean_and_stderr, slope_fit, KsResult, LineFit,
};

/// One jump across level y: undershoot A, overshoot B, size H, ratio U.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub u: f64,
    pub markval: Option<f64>,
}

/// The record of `jump` at level y when x_pre < y < x_post.
pub fn crossing_of(jump: &JumpEvent, y: f64, mark: Option<&MarkPath>) -> Option<CrossingRecord> {
    let post = jump.x_post();
    if !(jump.x_pre < y && y < post) {
        return None;
    }
    let a = y - jump.x_pre;
    let b = post - y;
    let h = a + b;
    Some(CrossingRecord {
        t: jump.t,
        a,
        b,
        h,
        u: a / h,
        markval: mark.map(|m| eval_mark(m, a)),
    })
}

pub fn collect_crossings(
    path: &PathSkeleton,
    y: f64,
    marks: Option<&[MarkPath]>,
) -> Result<Vec<CrossingRecord>> {
    if !y.is_finite() {
        return Err(param(format!("level must be finite, got {y}")));
    }
    if let Some(m) = marks {
        if m.len() != path.jumps.len() {
            return Err(param(format!(
                "{} marks for {} jumps",
                m.len(),
                path.jumps.len()
            )));
        }
    }
    Ok(path
        .jumps
        .iter()
        .enumerate()
        .filter_map(|(i, j)| crossing_of(j, y, marks.map(|m| &m[i])))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// markval ≥ h
    Mark,
    /// A ≥ h and B ≥ h
    Corridor,
    /// H > h
    JumpSize,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mark => "MARK",
            EstimatorKind::Corridor => "CORRIDOR",
            EstimatorKind::JumpSize => "JUMPSIZE",
        }
    }

    pub fn accepts(self, r: &CrossingRecord, h: f64) -> Result<bool> {
        Ok(match self {
            EstimatorKind::Mark => {
                r.markval.ok_or_else(|| {
                    Error::Contract("MARK estimator needs marked crossings".into())
                })? >= h
            }
            EstimatorKind::Corridor => r.a >= h && r.b >= h,
            EstimatorKind::JumpSize => r.h > h,
        })
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MARK" => Ok(EstimatorKind::Mark),
            "CORRIDOR" => Ok(EstimatorKind::Corridor),
            "JUMPSIZE" => Ok(EstimatorKind::JumpSize),
            _ => Err(param(format!("unknown estimator kind {s:?}"))),
        }
    }
}

/// Records with time ≤ t meeting the kind's threshold at h.
pub fn count_estimator(
    records: &[CrossingRecord],
    h: f64,
    kind: EstimatorKind,
    t: f64,
) -> Result<u64> {
    if !(h > 0.0) {
        return Err(param(format!("threshold must be positive, got {h}")));
    }
    let mut n = 0;
    for r in records.iter().filter(|r| r.t <= t) {
        if kind.accepts(r, h)? {
            n += 1;
        }
    }
    Ok(n)
}

/// h^{α/q} · count / c.
pub fn rescaled_estimate(count: u64, h: f64, alpha: f64, q: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(param(format!(
            "estimator constant must be positive, got {c}"
        )));
    }
    Ok(h.powf(alpha / q) * count as f64 / c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub h: Vec<f64>,
    pub sup_error: Vec<f64>,
    pub c: f64,
    pub levels: usize,
    pub times: usize,
    pub runtime_s: f64,
}

/// MARK counts m_h(y_i, t_j) for every h, level and time of `grid`,
/// indexed [k][i·n_times + j].
pub fn mark_count_field(
    path: &PathSkeleton,
    marks: &[MarkPath],
    h_list: &[f64],
    level_grid: &[f64],
    time_grid: &[f64],
) -> Result<Vec<Vec<u64>>> {
    if marks.len() != path.jumps.len() {
        return Err(param(format!(
            "{} marks for {} jumps",
            marks.len(),
            path.jumps.len()
        )));
    }
    let (nl, nt) = (level_grid.len(), time_grid.len());
    let mut inc = vec![vec![0u64; nl * nt]; h_list.len()];
    for (jump, mark) in path.jumps.iter().zip(marks) {
        let j0 = time_grid.partition_point(|&t| t < jump.t);
        if j0 == nt {
            continue;
        }
        let first = level_grid.partition_point(|&y| y <= jump.x_pre);
        for (i, &y) in level_grid.iter().enumerate().skip(first) {
            let Some(r) = crossing_of(jump, y, Some(mark)) else {
                break;
            };
            let v = r.markval.unwrap_or(0.0);
            for (k, &h) in h_list.iter().enumerate() {
                if v >= h {
                    inc[k][i * nt + j0] += 1;
                }
            }
        }
    }
    for field in &mut inc {
        for row in field.chunks_mut(nt) {
            for j in 1..nt {
                row[j] += row[j - 1];
            }
        }
    }
    Ok(inc)
}

/// For each h: sup over the baseline's (y, t) grid of |h^{α/q} m_h(y,t)/c − ℓ̂^y(t)|.
pub fn theorem1_sweep(
    path: &PathSkeleton,
    marks: &[MarkPath],
    q: f64,
    c: f64,
    h_list: &[f64],
    baseline: &LocalTimeField,
) -> Result<SweepResult> {
    let start = Instant::now();
    if h_list.windows(2).any(|w| !(w[0] > w[1])) || h_list.iter().any(|&h| !(h > 0.0)) {
        return Err(param("h list must be positive and strictly decreasing"));
    }
    let alpha = path.params.alpha;
    let counts = mark_count_field(
        path,
        marks,
        h_list,
        &baseline.level_grid,
        &baseline.time_grid,
    )?;
    let mut sup_error = Vec::with_capacity(h_list.len());
    for (k, &h) in h_list.iter().enumerate() {
        let mut sup = 0.0f64;
        for (&m, &ell) in counts[k].iter().zip(&baseline.ell) {
            sup = sup.max((rescaled_estimate(m, h, alpha, q, c)? - ell).abs());
        }
        sup_error.push(sup);
    }
    Ok(SweepResult {
        h: h_list.to_vec(),
        sup_error,
        c,
        levels: baseline.level_grid.len(),
        times: baseline.time_grid.len(),
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// count(h, T) / ℓ̂^y(T) for each h, T the last time of the field.
pub fn rate_per_local_time(
    records: &[CrossingRecord],
    field: &LocalTimeField,
    y: f64,
    h_list: &[f64],
    kind: EstimatorKind,
) -> Result<Vec<f64>> {
    let i = field
        .level_index(y)
        .ok_or_else(|| param(format!("level {y} is not on the level grid")))?;
    let ell = field.final_value(i);
    if !(ell > 0.0) {
        return Err(Error::Numeric(format!("zero local time at level {y}")));
    }
    let t = *field.time_grid.last().expect("non-empty time grid");
    h_list
        .iter()
        .map(|&h| Ok(count_estimator(records, h, kind, t)? as f64 / ell))
        .collect()
}

#[derive(Debug, Clone)]
pub struct IncrementScalingSpec {
    pub path: PathSpec,
    /// Level pairs (x_i, y_i) with distinct separations.
    pub pairs: Vec<(f64, f64)>,
    pub p: f64,
    pub horizon: f64,
    pub bandwidth: f64,
    pub replicas: usize,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementScaling {
    pub sep: Vec<f64>,
    pub moment: Vec<f64>,
    pub stderr: Vec<f64>,
    pub exponent: f64,
    pub exponent_stderr: f64,
}

/// Monte Carlo E|ℓ̂^y(N) − ℓ̂^x(N)|^p per pair and the log-log slope against |y − x|.
pub fn increment_scaling(spec: &IncrementScalingSpec) -> Result<IncrementScaling> {
    if !(spec.p >= 1.0) {
        return Err(param(format!("moment order must be >= 1, got {}", spec.p)));
    }
    if spec.pairs.is_empty() || spec.replicas == 0 {
        return Err(param("increment scaling needs pairs and replicas"));
    }
    let mut levels: Vec<f64> = spec.pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let index = |v: f64| levels.partition_point(|&l| l < v);
    let idx: Vec<(usize, usize)> = spec
        .pairs
        .iter()
        .map(|&(x, y)| (index(x), index(y)))
        .collect();
    let times = [spec.horizon];
    let per_replica: Vec<Result<Vec<f64>>> = replicate(
        spec.seed,
        spec.replicas,
        spec.threads,
        |_, mut s: RngStream| {
            let steps = PathStream::new(&spec.path, spec.horizon, &mut s)?;
            let field = occupation_from_steps(steps, &levels, spec.bandwidth, &times)?;
            Ok(idx
                .iter()
                .map(|&(i, j)| {
                    (field.final_value(j) - field.final_value(i))
                        .abs()
                        .powf(spec.p)
                })
                .collect())
        },
    );
    let mut columns = vec![Vec::with_capacity(spec.replicas); spec.pairs.len()];
    for r in per_replica {
        for (col, v) in columns.iter_mut().zip(r?) {
            col.push(v);
        }
    }
    let sep: Vec<f64> = spec.pairs.iter().map(|&(x, y)| (y - x).abs()).collect();
    let (moment, stderr): (Vec<f64>, Vec<f64>) = columns.iter().map(|c| mean_and_stderr(c)).unzip();
    let xs: Vec<f64> = sep.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = moment.iter().map(|m| m.ln()).collect();
    let fit = slope_fit(&xs, &ys)?;
    Ok(IncrementScaling {
        sep,
        moment,
        stderr,
        exponent: fit.slope,
        exponent_stderr: fit.stderr,
    })
}

#[cfg(test)]
mod tests;
