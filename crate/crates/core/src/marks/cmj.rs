//! Crump–Mode–Jagers aggregate of jump marks over a level grid.

use crate::error::{param, Result};
use crate::stablepath::PathSkeleton;

use super::{eval_mark, MarkPath};

/// Σ_{t_j ≤ T, x_pre < y < x_post} mark_j(y − x_pre) for each level y.
pub fn cmj_aggregate(
    path: &PathSkeleton,
    marks: &[MarkPath],
    level_grid: &[f64],
    horizon: f64,
) -> Result<Vec<f64>> {
    if marks.len() != path.jumps.len() {
        return Err(param(format!(
            "{} marks for {} jumps",
            marks.len(),
            path.jumps.len()
        )));
    }
    if level_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(param("level grid must be strictly ascending"));
    }
    let mut out = vec![0.0; level_grid.len()];
    for (jump, mark) in path.jumps.iter().zip(marks) {
        if jump.t > horizon {
            break;
        }
        let (a, b) = (jump.x_pre, jump.x_post());
        let first = level_grid.partition_point(|&y| y <= a);
        for (i, &y) in level_grid.iter().enumerate().skip(first) {
            if y >= b {
                break;
            }
            out[i] += eval_mark(mark, y - a);
        }
    }
    Ok(out)
}
