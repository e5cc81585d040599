//! Step walker shared by the lazy path stream and stored skeletons.
//!
//! The continuous part is linear between grid points; jumps occur at exact
//! times. Positions are always recomputed as continuous value plus the jump
//! sum so the two drivers produce bit-identical steps.

use crate::sampling::RngStream;

use super::JumpEvent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathStep {
    /// Linear motion from `x0` at `t0` to `x1` at `t1`, no jump inside.
    Segment {
        t0: f64,
        t1: f64,
        x0: f64,
        x1: f64,
    },
    Jump(JumpEvent),
}

pub(crate) trait JumpSource {
    /// Next (time, size) with strictly increasing times.
    fn next_jump(&mut self) -> Option<(f64, f64)>;
}

pub(crate) trait GridSource {
    /// Continuous part at the next grid time.
    fn next_value(&mut self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Grid {
    pub dt: f64,
    pub horizon: f64,
    /// Number of grid cells when the horizon is finite.
    pub cells: Option<u64>,
}

impl Grid {
    pub fn time(&self, k: u64) -> f64 {
        match self.cells {
            Some(n) if k >= n => self.horizon,
            _ => k as f64 * self.dt,
        }
    }
}

pub(crate) struct Walker<J, G> {
    grid: Grid,
    jumps: J,
    cont: G,
    t: f64,
    k: u64,
    c0: f64,
    c1: f64,
    c_now: f64,
    jump_sum: f64,
    next_jump: Option<(f64, f64)>,
    pending: Option<JumpEvent>,
}

impl<J: JumpSource, G: GridSource> Walker<J, G> {
    pub fn new(grid: Grid, mut jumps: J, mut cont: G) -> Self {
        let next_jump = jumps.next_jump();
        let c1 = if grid.horizon > 0.0 {
            cont.next_value()
        } else {
            0.0
        };
        Self {
            grid,
            jumps,
            cont,
            t: 0.0,
            k: 0,
            c0: 0.0,
            c1,
            c_now: 0.0,
            jump_sum: 0.0,
            next_jump,
            pending: None,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn into_sources(self) -> (J, G) {
        (self.jumps, self.cont)
    }
}

impl<J: JumpSource, G: GridSource> Iterator for Walker<J, G> {
    type Item = PathStep;

    fn next(&mut self) -> Option<PathStep> {
        loop {
            if let Some(j) = self.pending.take() {
                self.jump_sum += j.dx;
                self.next_jump = self.jumps.next_jump();
                return Some(PathStep::Jump(j));
            }
            if self.t >= self.grid.horizon {
                return None;
            }
            let ta = self.grid.time(self.k);
            let tg = self.grid.time(self.k + 1);
            let (te, jump) = match self.next_jump {
                Some((tj, dx)) if tj <= tg && tj <= self.grid.horizon => (tj, Some(dx)),
                _ => (tg.min(self.grid.horizon), None),
            };
            let ce = if te == tg {
                self.c1
            } else {
                self.c0 + (self.c1 - self.c0) * ((te - ta) / (tg - ta))
            };
            let x0 = self.c_now + self.jump_sum;
            let x1 = ce + self.jump_sum;
            let t0 = self.t;
            if let Some(dx) = jump {
                self.pending = Some(JumpEvent {
                    t: te,
                    x_pre: x1,
                    dx,
                });
            }
            if te == tg {
                self.k += 1;
                self.c0 = self.c1;
                if self.grid.cells.is_none_or(|n| self.k < n) {
                    self.c1 = self.cont.next_value();
                }
            }
            self.t = te;
            self.c_now = ce;
            if te > t0 {
                return Some(PathStep::Segment { t0, t1: te, x0, x1 });
            }
        }
    }
}

pub(crate) struct RandomJumps {
    pub t: f64,
    pub rate: f64,
    pub eps: f64,
    pub exponent: f64,
    pub rng: RngStream,
}

impl JumpSource for RandomJumps {
    fn next_jump(&mut self) -> Option<(f64, f64)> {
        self.t += self.rng.exp1() / self.rate;
        let dx = self.eps * self.rng.uniform().powf(self.exponent);
        Some((self.t, dx))
    }
}

pub(crate) struct RandomGrid {
    pub grid: Grid,
    pub k: u64,
    pub drift: f64,
    pub sd: f64,
    pub brownian: f64,
    pub rng: RngStream,
    pub record: Option<Vec<f64>>,
}

impl GridSource for RandomGrid {
    fn next_value(&mut self) -> f64 {
        let t0 = self.grid.time(self.k);
        self.k += 1;
        let t1 = self.grid.time(self.k);
        if self.sd > 0.0 {
            self.brownian += self.sd * (t1 - t0).sqrt() * self.rng.normal();
        }
        let c = -self.drift * t1 + self.brownian;
        if let Some(r) = self.record.as_mut() {
            r.push(c);
        }
        c
    }
}

pub(crate) struct StoredJumps<'a> {
    pub jumps: std::slice::Iter<'a, JumpEvent>,
}

impl JumpSource for StoredJumps<'_> {
    fn next_jump(&mut self) -> Option<(f64, f64)> {
        self.jumps.next().map(|j| (j.t, j.dx))
    }
}

pub(crate) struct StoredGrid<'a> {
    pub values: &'a [f64],
    pub k: usize,
}

impl GridSource for StoredGrid<'_> {
    fn next_value(&mut self) -> f64 {
        self.k += 1;
        self.values.get(self.k).copied().unwrap_or(0.0)
    }
}
