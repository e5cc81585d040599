//! Spectrally positive stable paths with Laplace exponent ψ(η) = aη^{1+α}.
//!
//! Jumps above ε are kept exactly; all jumps are compensated by the drift
//! −aμ_ε t, and jumps below ε are optionally replaced by a Brownian term of
//! variance aσ²_ε t. Between grid points the continuous part is linear.

mod dump;
mod occupation;
mod walk;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::sampling::RngStream;
use crate::specfun::gamma;

pub use dump::{read_skeleton, write_skeleton, SKELETON_MAGIC, SKELETON_VERSION};
pub use occupation::{
    inverse_local_time, occupation_from_steps, occupation_local_time, Bins, LocalTimeField,
    OccupationAccumulator,
};
pub use walk::PathStep;

use walk::{Grid, RandomGrid, RandomJumps, StoredGrid, StoredJumps, Walker};

pub const DEFAULT_JUMP_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub a: f64,
}

impl StableParams {
    pub fn new(alpha: f64, a: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(param(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(param(format!("a must be positive, got {a}")));
        }
        Ok(Self { alpha, a })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmallJumpMode {
    DriftOnly,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub x_pre: f64,
    pub dx: f64,
}

impl JumpEvent {
    pub fn x_post(&self) -> f64 {
        self.x_pre + self.dx
    }
}

fn check_alpha_x(alpha: f64, x: f64, name: &str) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(x > 0.0) {
        return Err(param(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

/// Πbar(x) = α x^{−α−1} / Γ(1−α).
pub fn levy_tail(alpha: f64, x: f64) -> Result<f64> {
    check_alpha_x(alpha, x, "x")?;
    Ok(alpha * x.powf(-alpha - 1.0) / gamma(1.0 - alpha))
}

/// Πbarbar(x) = x^{−α} / Γ(1−α).
pub fn levy_double_tail(alpha: f64, x: f64) -> Result<f64> {
    check_alpha_x(alpha, x, "x")?;
    Ok(x.powf(-alpha) / gamma(1.0 - alpha))
}

/// μ_ε = ∫_ε^∞ x Π(dx) = (1+α) ε^{−α} / Γ(1−α).
pub fn compensator_drift(alpha: f64, eps: f64) -> Result<f64> {
    check_alpha_x(alpha, eps, "eps")?;
    Ok((1.0 + alpha) * eps.powf(-alpha) / gamma(1.0 - alpha))
}

/// σ²_ε = ∫_0^ε x² Π(dx) = (1+α)α ε^{1−α} / ((1−α)Γ(1−α)).
pub fn small_jump_variance(alpha: f64, eps: f64) -> Result<f64> {
    check_alpha_x(alpha, eps, "eps")?;
    Ok((1.0 + alpha) * alpha * eps.powf(1.0 - alpha) / ((1.0 - alpha) * gamma(1.0 - alpha)))
}

/// Everything needed to drive a path except the horizon and the randomness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub params: StableParams,
    pub eps: f64,
    pub dt: f64,
    pub mode: SmallJumpMode,
}

impl PathSpec {
    pub fn new(params: StableParams, eps: f64, dt: f64, mode: SmallJumpMode) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(param(format!("eps must be positive, got {eps}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(param(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            params,
            eps,
            dt,
            mode,
        })
    }

    pub fn jump_rate(&self) -> f64 {
        self.params.a * levy_tail(self.params.alpha, self.eps).expect("validated")
    }

    pub fn drift(&self) -> f64 {
        self.params.a * compensator_drift(self.params.alpha, self.eps).expect("validated")
    }

    pub fn gaussian_sd(&self) -> f64 {
        match self.mode {
            SmallJumpMode::DriftOnly => 0.0,
            SmallJumpMode::Gaussian => (self.params.a
                * small_jump_variance(self.params.alpha, self.eps).expect("validated"))
            .sqrt(),
        }
    }

    fn sources(&self, grid: Grid, s: &mut RngStream) -> (RandomJumps, RandomGrid) {
        let (tj, tg) = (s.next_u64(), s.next_u64());
        let jump_rng = s.substream(tj);
        let grid_rng = s.substream(tg);
        let jumps = RandomJumps {
            t: 0.0,
            rate: self.jump_rate(),
            eps: self.eps,
            exponent: -1.0 / (1.0 + self.params.alpha),
            rng: jump_rng,
        };
        let cont = RandomGrid {
            grid,
            k: 0,
            drift: self.drift(),
            sd: self.gaussian_sd(),
            brownian: 0.0,
            rng: grid_rng,
            record: None,
        };
        (jumps, cont)
    }
}

/// Lazily generated path, unbounded unless a horizon is given. Draws the
/// same steps as [`simulate_path`] would store for the same stream and grid.
pub struct PathStream {
    inner: Walker<RandomJumps, RandomGrid>,
}

impl PathStream {
    /// Grid step is `spec.dt` exactly; `horizon` may be infinite.
    pub fn new(spec: &PathSpec, horizon: f64, s: &mut RngStream) -> Result<Self> {
        if !(horizon >= 0.0) {
            return Err(param(format!("horizon must be >= 0, got {horizon}")));
        }
        let grid = Grid {
            dt: spec.dt,
            horizon,
            cells: None,
        };
        let (jumps, cont) = spec.sources(grid, s);
        Ok(Self {
            inner: Walker::new(grid, jumps, cont),
        })
    }

    pub fn time(&self) -> f64 {
        self.inner.time()
    }
}

impl Iterator for PathStream {
    type Item = PathStep;

    fn next(&mut self) -> Option<PathStep> {
        self.inner.next()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    pub params: StableParams,
    pub horizon: f64,
    pub eps: f64,
    /// Effective grid step T/n, the largest step ≤ the requested one that
    /// divides the horizon.
    pub dt: f64,
    pub mode: SmallJumpMode,
    pub seed: u64,
    pub stream_index: u64,
    /// X at grid times k·dt, k = 0..=n.
    pub values: Vec<f64>,
    /// Continuous (non-jump) part at the same grid times.
    pub continuous: Vec<f64>,
    pub jumps: Vec<JumpEvent>,
}

fn grid_cells(horizon: f64, dt: f64) -> u64 {
    if horizon == 0.0 {
        0
    } else {
        ((horizon / dt) * (1.0 - 1e-12)).ceil().max(1.0) as u64
    }
}

pub fn simulate_path(
    params: StableParams,
    horizon: f64,
    eps: f64,
    dt: f64,
    mode: SmallJumpMode,
    s: &mut RngStream,
) -> Result<PathSkeleton> {
    simulate_path_capped(params, horizon, eps, dt, mode, DEFAULT_JUMP_CAP, s)
}

pub fn simulate_path_capped(
    params: StableParams,
    horizon: f64,
    eps: f64,
    dt: f64,
    mode: SmallJumpMode,
    jump_cap: f64,
    s: &mut RngStream,
) -> Result<PathSkeleton> {
    let spec = PathSpec::new(params, eps, dt, mode)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(param(format!(
            "horizon must be finite and >= 0, got {horizon}"
        )));
    }
    let expected = spec.jump_rate() * horizon;
    if expected > jump_cap {
        return Err(Error::ResourceCap {
            expected,
            cap: jump_cap,
        });
    }
    let (seed, stream_index) = (s.master_seed(), s.stream_index());
    let n = grid_cells(horizon, dt);
    let dt_eff = if n == 0 { dt } else { horizon / n as f64 };
    let grid = Grid {
        dt: dt_eff,
        horizon,
        cells: Some(n),
    };
    let (jumps_src, mut cont_src) = spec.sources(grid, s);
    cont_src.record = Some(vec![0.0]);
    let mut walker = Walker::new(grid, jumps_src, cont_src);
    let mut jumps = Vec::with_capacity(expected as usize + 16);
    for step in walker.by_ref() {
        if let PathStep::Jump(j) = step {
            jumps.push(j);
        }
    }
    let (_, cont_src) = walker.into_sources();
    let continuous = cont_src.record.expect("recording");
    debug_assert_eq!(continuous.len() as u64, n + 1);
    let spec_dt = PathSpec { dt: dt_eff, ..spec };
    PathSkeleton::assemble(spec_dt, horizon, seed, stream_index, continuous, jumps)
}

impl PathSkeleton {
    fn assemble(
        spec: PathSpec,
        horizon: f64,
        seed: u64,
        stream_index: u64,
        continuous: Vec<f64>,
        jumps: Vec<JumpEvent>,
    ) -> Result<Self> {
        let n = continuous.len() as u64 - 1;
        let grid = Grid {
            dt: spec.dt,
            horizon,
            cells: Some(n),
        };
        let mut values = Vec::with_capacity(continuous.len());
        let mut j = 0;
        let mut sum = 0.0;
        for (k, &c) in continuous.iter().enumerate() {
            let tk = grid.time(k as u64);
            while j < jumps.len() && jumps[j].t <= tk {
                sum += jumps[j].dx;
                j += 1;
            }
            values.push(c + sum);
        }
        Ok(Self {
            params: spec.params,
            horizon,
            eps: spec.eps,
            dt: spec.dt,
            mode: spec.mode,
            seed,
            stream_index,
            values,
            continuous,
            jumps,
        })
    }

    /// Builds a skeleton from an explicit continuous part (values at
    /// times k·horizon/n) and jump list; `x_pre` of each jump is recomputed.
    pub fn from_parts(
        params: StableParams,
        horizon: f64,
        eps: f64,
        mode: SmallJumpMode,
        continuous: Vec<f64>,
        jumps: &[(f64, f64)],
    ) -> Result<Self> {
        if continuous.is_empty() || continuous[0] != 0.0 {
            return Err(param("continuous part must start at 0"));
        }
        let n = continuous.len() - 1;
        if (n == 0) != (horizon == 0.0) {
            return Err(param(
                "horizon zero exactly when the grid has a single point",
            ));
        }
        let dt = if n == 0 { 1.0 } else { horizon / n as f64 };
        let spec = PathSpec::new(params, eps, dt, mode)?;
        if jumps.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(param("jump times must be strictly increasing"));
        }
        if let Some(&(t, dx)) = jumps
            .iter()
            .find(|j| !(j.1 > eps) || !(j.0 >= 0.0 && j.0 <= horizon))
        {
            return Err(param(format!(
                "jump (t={t}, dx={dx}) outside (0,horizon] or not above eps"
            )));
        }
        let grid = Grid {
            dt,
            horizon,
            cells: Some(n as u64),
        };
        let jump_events: Vec<JumpEvent> = jumps
            .iter()
            .map(|&(t, dx)| JumpEvent { t, x_pre: 0.0, dx })
            .collect();
        let walker = Walker::new(
            grid,
            StoredJumps {
                jumps: jump_events.iter(),
            },
            StoredGrid {
                values: &continuous,
                k: 0,
            },
        );
        let events: Vec<JumpEvent> = walker
            .filter_map(|s| match s {
                PathStep::Jump(j) => Some(j),
                _ => None,
            })
            .collect();
        Self::assemble(spec, horizon, 0, 0, continuous, events)
    }

    fn grid(&self) -> Grid {
        Grid {
            dt: self.dt,
            horizon: self.horizon,
            cells: Some(self.continuous.len() as u64 - 1),
        }
    }

    pub fn grid_time(&self, k: usize) -> f64 {
        self.grid().time(k as u64)
    }

    /// Segments and jumps in time order, identical to the generating walk.
    pub fn steps(&self) -> impl Iterator<Item = PathStep> + '_ {
        Walker::new(
            self.grid(),
            StoredJumps {
                jumps: self.jumps.iter(),
            },
            StoredGrid {
                values: &self.continuous,
                k: 0,
            },
        )
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("non-empty grid")
    }
}

/// First hitting times of a set of levels, fed one step at a time.
#[derive(Debug, Clone)]
pub struct PassageTracker {
    pub levels: Vec<f64>,
    pub times: Vec<f64>,
    open: usize,
}

impl PassageTracker {
    pub fn new(levels: &[f64]) -> Self {
        let times: Vec<f64> = levels
            .iter()
            .map(|&y| if y == 0.0 { 0.0 } else { f64::INFINITY })
            .collect();
        let open = times.iter().filter(|t| t.is_infinite()).count();
        Self {
            levels: levels.to_vec(),
            times,
            open,
        }
    }

    pub fn all_hit(&self) -> bool {
        self.open == 0
    }

    pub fn observe(&mut self, step: &PathStep) {
        let PathStep::Segment { t0, t1, x0, x1 } = *step else {
            return;
        };
        if self.open == 0 {
            return;
        }
        let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
        for (y, t) in self.levels.iter().zip(self.times.iter_mut()) {
            if t.is_finite() || *y < lo || *y > hi {
                continue;
            }
            *t = if x0 == *y || x1 == x0 {
                t0
            } else {
                (t0 + (y - x0) / (x1 - x0) * (t1 - t0)).clamp(t0, t1)
            };
            self.open -= 1;
        }
    }
}

/// Hitting time inf{t : X_t = y}; jumps over y do not count. +∞ if never.
pub fn first_passage(path: &PathSkeleton, y: f64) -> f64 {
    let mut tracker = PassageTracker::new(&[y]);
    for step in path.steps() {
        tracker.observe(&step);
        if tracker.all_hit() {
            break;
        }
    }
    tracker.times[0]
}

/// Steps of a path truncated at time `until`.
pub fn steps_until<I: Iterator<Item = PathStep>>(
    steps: I,
    until: f64,
) -> impl Iterator<Item = PathStep> {
    steps
        .take_while(move |s| match s {
            PathStep::Segment { t0, .. } => *t0 < until,
            PathStep::Jump(j) => j.t <= until,
        })
        .map(move |s| match s {
            PathStep::Segment { t0, t1, x0, x1 } if t1 > until => {
                let x = x0 + (x1 - x0) * ((until - t0) / (t1 - t0));
                PathStep::Segment {
                    t0,
                    t1: until,
                    x0,
                    x1: x,
                }
            }
            other => other,
        })
}

#[cfg(test)]
mod tests;
