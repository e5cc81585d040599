//! Monte Carlo of σ^b_1, the inverse local time at 0 of X^b, against Θ^b.
//!
//! X^b is simulated directly in restricted time with drift-only truncation.
//! A jump landing above b restarts at b, which is where the base path
//! re-enters. An excursion below 0 is followed jump by jump until it is
//! deeper than `shortcut_depth`; its landing is then drawn from the exact
//! first-passage overshoot law of the stable process.

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::sampling::{replicate, sample_truncated_jump, RngStream};
use crate::specfun::theta_b_closed;
use crate::stablepath::{PathSpec, SmallJumpMode, StableParams};

/// Overshoot above 0 at first passage from −depth: depth · W/(1−W) with
/// W ~ Beta(1−α, α).
pub fn overshoot_from_below(alpha: f64, depth: f64, s: &mut RngStream) -> f64 {
    let w: f64 = Beta::new(1.0 - alpha, alpha)
        .expect("alpha in (0,1)")
        .sample(s);
    depth * w / (1.0 - w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSpec {
    pub params: StableParams,
    pub eps: f64,
    pub b: f64,
    pub q_list: Vec<f64>,
    pub replicas: usize,
    /// Occupation band [0, w) at level 0; a second band [0, w/2) is used
    /// for extrapolation.
    pub bandwidth: f64,
    /// Restricted-time censoring horizon.
    pub horizon: f64,
    pub shortcut_depth: f64,
    pub seed: u64,
    pub threads: usize,
}

/// σ̂^b_1 for bands [0, w) and [0, w/2); +∞ when censored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaReplica {
    pub sigma_w: f64,
    pub sigma_half: f64,
    pub jumps: u64,
}

impl SigmaReplica {
    pub fn censored(&self) -> bool {
        !(self.sigma_w.is_finite() && self.sigma_half.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub q: f64,
    /// 2·Θ̂(w/2) − Θ̂(w).
    pub empirical: f64,
    pub empirical_w: f64,
    pub empirical_half: f64,
    pub theta_b: f64,
    pub rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaResult {
    pub rows: Vec<SigmaRow>,
    pub replicas: usize,
    pub censored: usize,
    pub censored_frac: f64,
    /// Sample moments of orders 1..=4 of uncensored σ̂ at bandwidth w/2.
    pub moments: Vec<f64>,
}

struct Bands {
    width: [f64; 2],
    occupied: [f64; 2],
    sigma: [f64; 2],
}

impl Bands {
    /// A descent from `from` to `to` (0 ≤ to ≤ from) at `speed`, starting
    /// at restricted time r.
    fn descend(&mut self, r: f64, from: f64, to: f64, speed: f64) {
        for k in 0..2 {
            if self.sigma[k].is_finite() {
                continue;
            }
            let w = self.width[k];
            let top = from.min(w);
            if top <= to {
                continue;
            }
            let dur = (top - to) / speed;
            let need = w - self.occupied[k];
            if dur >= need {
                self.sigma[k] = r + (from - top) / speed + need;
            } else {
                self.occupied[k] += dur;
            }
        }
    }

    fn done(&self) -> bool {
        self.sigma.iter().all(|s| s.is_finite())
    }
}

fn simulate_replica(spec: &SigmaSpec, path: &PathSpec, s: &mut RngStream) -> SigmaReplica {
    let alpha = spec.params.alpha;
    let rate = path.jump_rate();
    let speed = path.drift();
    let mut bands = Bands {
        width: [spec.bandwidth, 0.5 * spec.bandwidth],
        occupied: [0.0; 2],
        sigma: [f64::INFINITY; 2],
    };
    let mut jumps = 0u64;
    let mut jump = |s: &mut RngStream| {
        jumps += 1;
        sample_truncated_jump(alpha, spec.eps, s.uniform()).expect("validated")
    };
    let (mut x, mut r) = (0.0f64, 0.0f64);
    while !bands.done() && r <= spec.horizon {
        let wait = s.exp1() / rate;
        let drop = speed * wait;
        if drop < x {
            bands.descend(r, x, x - drop, speed);
            r += wait;
            x = (x - drop + jump(s)).min(spec.b);
            continue;
        }
        bands.descend(r, x, 0.0, speed);
        r += x / speed;
        let mut depth = drop - x;
        x = loop {
            let landing = jump(s) - depth;
            if landing >= 0.0 {
                break landing.min(spec.b);
            }
            depth = -landing;
            if depth > spec.shortcut_depth {
                break overshoot_from_below(alpha, depth, s).min(spec.b);
            }
            depth += speed * s.exp1() / rate;
        };
    }
    SigmaReplica {
        sigma_w: bands.sigma[0],
        sigma_half: bands.sigma[1],
        jumps,
    }
}

fn laplace_exponent(sigmas: &[f64], q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let mean = sigmas.iter().map(|&v| (-q * v).exp()).sum::<f64>() / sigmas.len() as f64;
    -mean.ln()
}

pub fn sigma_b_replicas(spec: &SigmaSpec) -> Result<Vec<SigmaReplica>> {
    if !(spec.b > 0.0) || !(spec.bandwidth > 0.0 && spec.bandwidth < spec.b) {
        return Err(param("need b > 0 and 0 < bandwidth < b"));
    }
    if spec.replicas < 1000 {
        return Err(param(format!(
            "at least 1000 replicas required, got {}",
            spec.replicas
        )));
    }
    if let Some(q) = spec.q_list.iter().find(|&&q| !(q >= 0.0 && q.is_finite())) {
        return Err(param(format!("q must be finite and >= 0, got {q}")));
    }
    if !(spec.horizon > 0.0) || !(spec.shortcut_depth > 0.0) {
        return Err(param("horizon and shortcut depth must be positive"));
    }
    let path = PathSpec::new(spec.params, spec.eps, 1.0, SmallJumpMode::DriftOnly)?;
    Ok(replicate(
        spec.seed,
        spec.replicas,
        spec.threads,
        |_, mut s| simulate_replica(spec, &path, &mut s),
    ))
}

pub fn sigma_b_experiment(spec: &SigmaSpec) -> Result<SigmaResult> {
    let reps = sigma_b_replicas(spec)?;
    let censored = reps.iter().filter(|r| r.censored()).count();
    let sw: Vec<f64> = reps.iter().map(|r| r.sigma_w).collect();
    let sh: Vec<f64> = reps.iter().map(|r| r.sigma_half).collect();
    let mut rows = Vec::with_capacity(spec.q_list.len());
    for &q in &spec.q_list {
        let (ew, eh) = (laplace_exponent(&sw, q), laplace_exponent(&sh, q));
        let empirical = 2.0 * eh - ew;
        let theta_b = if q == 0.0 {
            0.0
        } else {
            theta_b_closed(spec.params.alpha, spec.params.a, spec.b, q)?
        };
        let diff = (empirical - theta_b).abs();
        rows.push(SigmaRow {
            q,
            empirical,
            empirical_w: ew,
            empirical_half: eh,
            theta_b,
            rel_diff: if theta_b > 0.0 { diff / theta_b } else { diff },
        });
    }
    let done: Vec<f64> = sh.iter().copied().filter(|v| v.is_finite()).collect();
    if done.is_empty() {
        return Err(Error::Numeric("every replica was censored".into()));
    }
    let moments = (1..=4)
        .map(|k| done.iter().map(|v| v.powi(k)).sum::<f64>() / done.len() as f64)
        .collect();
    Ok(SigmaResult {
        rows,
        replicas: spec.replicas,
        censored,
        censored_frac: censored as f64 / spec.replicas as f64,
        moments,
    })
}
