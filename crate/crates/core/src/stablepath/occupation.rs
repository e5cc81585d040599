//! Occupation-density local times on a level × time grid.

use crate::error::{param, Result};

use super::{PathSkeleton, PathStep};

/// Half-open level bins [lo_i, hi_i) with both edge sequences ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bins {
    /// Bins [y − w/2, y + w/2) centred on an ascending level grid.
    pub fn centered(levels: &[f64], w: f64) -> Result<Self> {
        if !(w > 0.0) {
            return Err(param(format!("bandwidth must be positive, got {w}")));
        }
        check_ascending(levels, "level grid")?;
        Ok(Self {
            lo: levels.iter().map(|y| y - 0.5 * w).collect(),
            hi: levels.iter().map(|y| y + 0.5 * w).collect(),
        })
    }

    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(param("bins need matching edges with lo < hi"));
        }
        if lo.windows(2).any(|w| w[0] > w[1]) || hi.windows(2).any(|w| w[0] > w[1]) {
            return Err(param("bin edges must be ascending"));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }
}

fn check_ascending(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(param(format!("{what} must be non-empty")));
    }
    if v.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(param(format!("{what} must be strictly ascending")));
    }
    Ok(())
}

/// Exact Lebesgue time spent in each bin by a piecewise-linear path.
#[derive(Debug, Clone)]
pub struct OccupationAccumulator {
    pub bins: Bins,
    pub time: Vec<f64>,
}

impl OccupationAccumulator {
    pub fn new(bins: Bins) -> Self {
        let n = bins.len();
        Self {
            bins,
            time: vec![0.0; n],
        }
    }

    pub fn add_segment(&mut self, duration: f64, x0: f64, x1: f64) {
        if !(duration > 0.0) {
            return;
        }
        let b = &self.bins;
        if x0 == x1 {
            let first = b.hi.partition_point(|&h| h <= x0);
            for i in first..b.len() {
                if b.lo[i] > x0 {
                    break;
                }
                self.time[i] += duration;
            }
            return;
        }
        let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
        let rate = duration / (hi - lo);
        let first = b.hi.partition_point(|&h| h <= lo);
        for i in first..b.len() {
            if b.lo[i] >= hi {
                break;
            }
            let overlap = hi.min(b.hi[i]) - lo.max(b.lo[i]);
            if overlap > 0.0 {
                self.time[i] += overlap * rate;
            }
        }
    }

    pub fn add_step(&mut self, step: &PathStep) {
        if let PathStep::Segment { t0, t1, x0, x1 } = *step {
            self.add_segment(t1 - t0, x0, x1);
        }
    }
}

/// ℓ̂^{y_i}(t_j) stored row-major by level.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField {
    pub level_grid: Vec<f64>,
    pub time_grid: Vec<f64>,
    pub bandwidth: f64,
    pub ell: Vec<f64>,
}

impl LocalTimeField {
    pub fn new(
        level_grid: Vec<f64>,
        time_grid: Vec<f64>,
        bandwidth: f64,
        ell: Vec<f64>,
    ) -> Result<Self> {
        if ell.len() != level_grid.len() * time_grid.len() {
            return Err(param("field size does not match its grids"));
        }
        Ok(Self {
            level_grid,
            time_grid,
            bandwidth,
            ell,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.ell[i * self.time_grid.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nt = self.time_grid.len();
        &self.ell[i * nt..(i + 1) * nt]
    }

    /// Index of `y` in the level grid, allowing 1e-9 relative slack.
    pub fn level_index(&self, y: f64) -> Option<usize> {
        let tol = 1e-9 * y.abs().max(1.0);
        let i = self.level_grid.partition_point(|&v| v < y - tol);
        (i < self.level_grid.len() && (self.level_grid[i] - y).abs() <= tol).then_some(i)
    }

    /// ℓ̂^y at the last time-grid point.
    pub fn final_value(&self, i: usize) -> f64 {
        self.get(i, self.time_grid.len() - 1)
    }
}

/// Builds the field from any step sequence; snapshots at `time_grid` points
/// beyond the last step repeat the final occupation.
pub fn occupation_from_steps<I: IntoIterator<Item = PathStep>>(
    steps: I,
    level_grid: &[f64],
    w: f64,
    time_grid: &[f64],
) -> Result<LocalTimeField> {
    check_ascending(time_grid, "time grid")?;
    let bins = Bins::centered(level_grid, w)?;
    let nl = level_grid.len();
    let nt = time_grid.len();
    let mut acc = OccupationAccumulator::new(bins);
    let mut ell = vec![0.0; nl * nt];
    let snapshot = |acc: &OccupationAccumulator, ell: &mut Vec<f64>, j: usize| {
        for i in 0..nl {
            ell[i * nt + j] = acc.time[i] / w;
        }
    };
    let mut j = 0;
    for step in steps {
        let PathStep::Segment {
            mut t0,
            t1,
            mut x0,
            x1,
        } = step
        else {
            continue;
        };
        while j < nt && time_grid[j] < t1 {
            let tj = time_grid[j];
            if tj > t0 {
                let xs = x0 + (x1 - x0) * ((tj - t0) / (t1 - t0));
                acc.add_segment(tj - t0, x0, xs);
                t0 = tj;
                x0 = xs;
            }
            snapshot(&acc, &mut ell, j);
            j += 1;
        }
        acc.add_segment(t1 - t0, x0, x1);
    }
    while j < nt {
        snapshot(&acc, &mut ell, j);
        j += 1;
    }
    LocalTimeField::new(level_grid.to_vec(), time_grid.to_vec(), w, ell)
}

pub fn occupation_local_time(
    path: &PathSkeleton,
    level_grid: &[f64],
    w: f64,
    time_grid: &[f64],
) -> Result<LocalTimeField> {
    occupation_from_steps(path.steps(), level_grid, w, time_grid)
}

/// τ^y(s): first time-grid point with ℓ̂^y > s, +∞ if none.
pub fn inverse_local_time(field: &LocalTimeField, y: f64, s: f64) -> Result<f64> {
    let i = field
        .level_index(y)
        .ok_or_else(|| param(format!("level {y} is not on the level grid")))?;
    if !(s >= 0.0) {
        return Err(param(format!("local-time level must be >= 0, got {s}")));
    }
    let row = field.row(i);
    let j = row.partition_point(|&v| v <= s);
    Ok(field.time_grid.get(j).copied().unwrap_or(f64::INFINITY))
}
