//! The path restricted to [0, b] by the time change
//! X^b_r = X_{τ^{[0,b]}(r)}, with R^{[0,b]}(t) = Leb{s ≤ t : 0 ≤ X_s ≤ b}.
//!
//! Jumps across b stop at b, and re-entry from below 0 lands at the
//! jump's landing value clipped into [0, b].

mod sigma;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::stablepath::{JumpEvent, PathSkeleton, PathStep};

pub use sigma::{
    overshoot_from_below, sigma_b_experiment, sigma_b_replicas, SigmaReplica, SigmaResult,
    SigmaRow, SigmaSpec,
};

/// Restricted time [r0, r1] maps to original time [t0, t0 + r1 − r0] with
/// X^b linear from x0 to x1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictedPiece {
    pub r0: f64,
    pub r1: f64,
    pub t0: f64,
    pub x0: f64,
    pub x1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedPath {
    pub b: f64,
    pub pieces: Vec<RestrictedPiece>,
}

/// The part of a linear segment inside [0, b] as (s_lo, s_hi, x_lo, x_hi)
/// in segment fractions, endpoints snapped to the boundary levels.
fn clip_segment(x0: f64, x1: f64, b: f64) -> Option<(f64, f64, f64, f64)> {
    if x0 == x1 {
        return (0.0..=b).contains(&x0).then_some((0.0, 1.0, x0, x1));
    }
    let frac = |level: f64| (level - x0) / (x1 - x0);
    let (mut lo, mut hi, mut x_lo, mut x_hi) = (0.0, 1.0, x0, x1);
    for level in [0.0, b] {
        let s = frac(level);
        let entering = if level == 0.0 { x1 > x0 } else { x1 < x0 };
        if entering {
            if s > lo {
                lo = s;
                x_lo = level;
            }
        } else if s < hi {
            hi = s;
            x_hi = level;
        }
    }
    (lo < hi).then_some((lo, hi, x_lo, x_hi))
}

/// Applies the time change to any step sequence in original time.
pub fn restrict_steps<I: IntoIterator<Item = PathStep>>(
    steps: I,
    b: f64,
) -> Result<RestrictedPath> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(param(format!("upper boundary must be positive, got {b}")));
    }
    let mut pieces: Vec<RestrictedPiece> = Vec::new();
    let mut r = 0.0;
    for step in steps {
        let PathStep::Segment { t0, t1, x0, x1 } = step else {
            continue;
        };
        let Some((lo, hi, x_lo, x_hi)) = clip_segment(x0, x1, b) else {
            continue;
        };
        let start = if lo == 0.0 { t0 } else { t0 + lo * (t1 - t0) };
        let end = if hi == 1.0 { t1 } else { t0 + hi * (t1 - t0) };
        if !(end > start) {
            continue;
        }
        pieces.push(RestrictedPiece {
            r0: r,
            r1: r + (end - start),
            t0: start,
            x0: x_lo,
            x1: x_hi,
        });
        r += end - start;
    }
    Ok(RestrictedPath { b, pieces })
}

pub fn restrict_path(path: &PathSkeleton, b: f64) -> Result<RestrictedPath> {
    restrict_steps(path.steps(), b)
}

impl RestrictedPath {
    pub fn total_time(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.r1)
    }

    fn piece_at(&self, r: f64) -> Option<&RestrictedPiece> {
        let i = self.pieces.partition_point(|p| p.r1 <= r);
        self.pieces
            .get(i)
            .or_else(|| self.pieces.last().filter(|p| r == p.r1))
    }

    /// τ^{[0,b]}(r), right-continuous at excision points.
    pub fn time_map(&self, r: f64) -> Option<f64> {
        self.piece_at(r).map(|p| p.t0 + (r - p.r0))
    }

    pub fn value(&self, r: f64) -> Option<f64> {
        self.piece_at(r).map(|p| {
            if r == p.r1 {
                p.x1
            } else if r == p.r0 {
                p.x0
            } else {
                p.x0 + (p.x1 - p.x0) * ((r - p.r0) / (p.r1 - p.r0))
            }
        })
    }

    /// X^b at r = k·dr for k = 0..=floor(total/dr).
    pub fn values_on_grid(&self, dr: f64) -> Result<Vec<f64>> {
        if !(dr > 0.0) {
            return Err(param(format!("grid step must be positive, got {dr}")));
        }
        let n = (self.total_time() / dr).floor() as usize;
        Ok((0..=n).filter_map(|k| self.value(k as f64 * dr)).collect())
    }

    /// Segments in restricted time with upward jumps at re-entry points.
    pub fn steps(&self) -> Vec<PathStep> {
        let mut out = Vec::with_capacity(2 * self.pieces.len());
        for (k, p) in self.pieces.iter().enumerate() {
            if k > 0 {
                let prev = self.pieces[k - 1].x1;
                if p.x0 != prev {
                    out.push(PathStep::Jump(JumpEvent {
                        t: p.r0,
                        x_pre: prev,
                        dx: p.x0 - prev,
                    }));
                }
            }
            out.push(PathStep::Segment {
                t0: p.r0,
                t1: p.r1,
                x0: p.x0,
                x1: p.x1,
            });
        }
        out
    }

    /// Restricts again to [0, b2], composing the time maps.
    pub fn restrict(&self, b2: f64) -> Result<RestrictedPath> {
        let mut inner = restrict_steps(self.steps(), b2)?;
        for p in &mut inner.pieces {
            p.t0 = self.time_map(p.t0).expect("inside the restricted domain");
        }
        Ok(inner)
    }
}
