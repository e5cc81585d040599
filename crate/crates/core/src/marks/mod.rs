//! Self-similar jump marks: the hat kernel, BESQ excursion marks via the
//! BESQ(4+2α) bridge, Hölder diagnostics, piling and the CMJ aggregate.

mod cmj;
mod piling;

use std::fmt;
use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::sampling::{sample_ncchisq, RngStream};
use crate::specfun::gamma;
use crate::stablepath::JumpEvent;

pub use cmj::cmj_aggregate;
pub use piling::{pile_jumps, PileSet};

pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// User-supplied unit-path law for [`KernelVariant::Custom`].
pub trait UnitPathSampler: Send + Sync {
    /// `resolution` samples of a path on the uniform grid of [0,1].
    fn sample(&self, resolution: usize, s: &mut RngStream) -> Vec<f64>;

    fn is_deterministic(&self) -> bool {
        false
    }
}

#[derive(Clone)]
pub enum KernelVariant {
    Hat,
    BesqExc { alpha: f64 },
    Custom(Arc<dyn UnitPathSampler>),
}

impl fmt::Debug for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelVariant::Hat => write!(f, "Hat"),
            KernelVariant::BesqExc { alpha } => write!(f, "BesqExc({alpha})"),
            KernelVariant::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MarkKernel {
    pub variant: KernelVariant,
    pub q: f64,
    /// Samples per unit path, on the grid j/(resolution−1).
    pub resolution: usize,
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(param(format!(
            "mark resolution must be >= 2, got {resolution}"
        )));
    }
    Ok(())
}

impl MarkKernel {
    pub fn hat(resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(Self {
            variant: KernelVariant::Hat,
            q: 1.0,
            resolution,
        })
    }

    pub fn besq_exc(alpha: f64, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(param(format!("alpha must lie in (0,1), got {alpha}")));
        }
        Ok(Self {
            variant: KernelVariant::BesqExc { alpha },
            q: 1.0,
            resolution,
        })
    }

    pub fn custom(sampler: Arc<dyn UnitPathSampler>, q: f64, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        if !(q > 0.0 && q.is_finite()) {
            return Err(param(format!(
                "kernel exponent q must be positive, got {q}"
            )));
        }
        Ok(Self {
            variant: KernelVariant::Custom(sampler),
            q,
            resolution,
        })
    }

    pub fn is_deterministic(&self) -> bool {
        match &self.variant {
            KernelVariant::Hat => true,
            KernelVariant::BesqExc { .. } => false,
            KernelVariant::Custom(c) => c.is_deterministic(),
        }
    }
}

/// A mark on [0, x]: s ↦ scale · Z(s/x) with Z given by unit samples.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkPath {
    pub x: f64,
    pub q: f64,
    pub scale: f64,
    pub unit: Arc<[f64]>,
}

impl MarkPath {
    pub fn unit(q: f64, samples: Vec<f64>) -> Self {
        Self {
            x: 1.0,
            q,
            scale: 1.0,
            unit: samples.into(),
        }
    }

    /// Samples of the scaled mark on its own grid.
    pub fn samples(&self) -> Vec<f64> {
        self.unit.iter().map(|v| v * self.scale).collect()
    }
}

pub fn hat_samples(resolution: usize) -> Vec<f64> {
    let m = (resolution - 1) as f64;
    (0..resolution)
        .map(|j| {
            let u = j as f64 / m;
            u.min(1.0 - u)
        })
        .collect()
}

pub fn sample_unit_path(kernel: &MarkKernel, s: &mut RngStream) -> MarkPath {
    let samples = match &kernel.variant {
        KernelVariant::Hat => hat_samples(kernel.resolution),
        KernelVariant::BesqExc { alpha } => {
            return besq_bridge(*alpha, kernel.resolution, s).expect("validated kernel");
        }
        KernelVariant::Custom(c) => c.sample(kernel.resolution, s),
    };
    MarkPath::unit(kernel.q, samples)
}

/// (x^q Z(s/x), 0 ≤ s ≤ x) applied to the mark's current domain.
pub fn scale_mark(mark: &MarkPath, x: f64) -> MarkPath {
    MarkPath {
        x: mark.x * x,
        q: mark.q,
        scale: mark.scale * x.powf(mark.q),
        unit: mark.unit.clone(),
    }
}

/// Linear interpolation on the scaled grid inside (0, x); 0 outside.
pub fn eval_mark(mark: &MarkPath, s: f64) -> f64 {
    if !(s > 0.0 && s < mark.x) {
        return 0.0;
    }
    let n = mark.unit.len();
    let pos = s / mark.x * (n - 1) as f64;
    let i = (pos as usize).min(n - 2);
    let frac = pos - i as f64;
    let (a, b) = (mark.unit[i], mark.unit[i + 1]);
    mark.scale * (a + frac * (b - a))
}

/// One mark per jump, scaled to the jump size.
pub fn attach_marks(kernel: &MarkKernel, jumps: &[JumpEvent], s: &mut RngStream) -> Vec<MarkPath> {
    if kernel.is_deterministic() {
        let unit = sample_unit_path(kernel, s);
        return jumps.iter().map(|j| scale_mark(&unit, j.dx)).collect();
    }
    jumps
        .iter()
        .map(|j| scale_mark(&sample_unit_path(kernel, s), j.dx))
        .collect()
}

/// BESQ(δ) started at x0 at `time_grid[0]`, exact noncentral chi-square steps.
pub fn besq_from_zero(
    delta: f64,
    x0: f64,
    time_grid: &[f64],
    s: &mut RngStream,
) -> Result<Vec<f64>> {
    if !(delta >= 0.0) || !(x0 >= 0.0) {
        return Err(param(format!(
            "BESQ needs delta >= 0 and x0 >= 0, got {delta}, {x0}"
        )));
    }
    if time_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(param("BESQ time grid must be strictly ascending"));
    }
    let mut out = Vec::with_capacity(time_grid.len());
    let mut x = x0;
    for (k, &t) in time_grid.iter().enumerate() {
        if k > 0 {
            let h = t - time_grid[k - 1];
            x = h * sample_ncchisq(delta, x / h, s);
        }
        out.push(x);
    }
    Ok(out)
}

/// Normalized BESQ(−2α) excursion as Z_u = u² X_{1/u−1}, X ~ BESQ(4+2α)
/// from 0, on u_j = j/(resolution−1), with Z_0 = 0.
pub fn besq_bridge(alpha: f64, resolution: usize, s: &mut RngStream) -> Result<MarkPath> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    check_resolution(resolution)?;
    let m = resolution - 1;
    // ascending times t = (m−j)/j for j = m, m−1, …, 1
    let times: Vec<f64> = (1..=m).rev().map(|j| (m - j) as f64 / j as f64).collect();
    let x = besq_from_zero(4.0 + 2.0 * alpha, 0.0, &times, s)?;
    let mut z = vec![0.0; resolution];
    for (idx, j) in (1..=m).rev().enumerate() {
        let u = j as f64 / m as f64;
        z[j] = u * u * x[idx];
    }
    z[m] = 0.0;
    Ok(MarkPath::unit(1.0, z))
}

fn check_holder_args(samples: &[f64], grid: &[f64], gamma_exp: f64) -> Result<()> {
    if !(gamma_exp > 0.0) {
        return Err(param(format!("gamma must be positive, got {gamma_exp}")));
    }
    if samples.len() < 2 || samples.len() != grid.len() {
        return Err(param(
            "Hölder quotient needs >= 2 samples matching the grid",
        ));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(param("Hölder grid must be strictly ascending"));
    }
    Ok(())
}

#[inline]
fn pair_quotient(samples: &[f64], grid: &[f64], i: usize, j: usize, gamma_exp: f64) -> f64 {
    (samples[j] - samples[i]).abs() / (grid[j] - grid[i]).powf(gamma_exp)
}

/// max over grid pairs of |f(t)−f(s)| / |t−s|^γ, by exhaustive scan.
pub fn holder_quotient_brute(samples: &[f64], grid: &[f64], gamma_exp: f64) -> Result<f64> {
    check_holder_args(samples, grid, gamma_exp)?;
    let n = samples.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(pair_quotient(samples, grid, i, j, gamma_exp));
        }
    }
    Ok(best)
}

/// Same value as [`holder_quotient_brute`], scanning by lag and skipping
/// pairs whose increment cannot beat the current maximum.
pub fn holder_quotient(samples: &[f64], grid: &[f64], gamma_exp: f64) -> Result<f64> {
    check_holder_args(samples, grid, gamma_exp)?;
    let n = samples.len();
    let min_step = grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let range = hi - lo;
    let mut best = 0.0f64;
    for d in 1..n {
        // lower bound on (t_{i+d} − t_i)^γ with slack for rounding
        let floor = (d as f64 * min_step).powf(gamma_exp) * (1.0 - 1e-9);
        if range / floor <= best {
            break;
        }
        let need = best * floor;
        for i in 0..n - d {
            if (samples[i + d] - samples[i]).abs() > need {
                best = best.max(pair_quotient(samples, grid, i, i + d, gamma_exp));
            }
        }
    }
    Ok(best)
}

/// c = (1+α) Γ(1−α)^{−1} E[Z(U)^{α/q}]: closed forms for the hat and BESQ
/// kernels, Monte Carlo with [`DEFAULT_MC_SAMPLES`] draws for custom ones.
pub fn mark_constant_c(kernel: &MarkKernel, alpha: f64, s: &mut RngStream) -> Result<f64> {
    mark_constant_c_mc(kernel, alpha, DEFAULT_MC_SAMPLES, s)
}

pub fn mark_constant_c_mc(
    kernel: &MarkKernel,
    alpha: f64,
    samples: usize,
    s: &mut RngStream,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(kernel.q > alpha) {
        return Err(Error::Unsupported(format!(
            "mark constant needs q > alpha, got q={}, alpha={alpha}",
            kernel.q
        )));
    }
    match kernel.variant {
        KernelVariant::Hat => Ok(2f64.powf(-alpha) / gamma(1.0 - alpha)),
        KernelVariant::BesqExc { .. } => {
            Ok(2f64.powf(alpha) * gamma(1.0 + alpha) / gamma(1.0 - alpha))
        }
        KernelVariant::Custom(_) => {
            if samples == 0 {
                return Err(param("Monte Carlo estimate needs at least one sample"));
            }
            let p = alpha / kernel.q;
            let mut sum = 0.0;
            let mut unit = sample_unit_path(kernel, s);
            for k in 0..samples {
                if k > 0 && !kernel.is_deterministic() {
                    unit = sample_unit_path(kernel, s);
                }
                let u = s.uniform();
                sum += eval_mark(&unit, u).max(0.0).powf(p);
            }
            Ok((1.0 + alpha) / gamma(1.0 - alpha) * sum / samples as f64)
        }
    }
}

#[cfg(test)]
mod tests;
