//! Reproducible random streams and primitive samplers.
//!
//! A stream is a ChaCha8 generator keyed by the master seed with the
//! stream index as its ChaCha stream id, so replica `i` draws the same
//! numbers no matter which worker runs it.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{param, Result};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from(words: &[u64]) -> [u8; 32] {
    let mut state = 0x5EED_0F5C_A1AB_1E00u64;
    for &w in words {
        state ^= w;
        splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key_from(&[master_seed]));
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Independent stream tagged by `tag`, a pure function of
    /// (master_seed, stream_index, tag) and not of this stream's state.
    pub fn substream(&self, tag: u64) -> RngStream {
        let mut rng = ChaCha8Rng::from_seed(key_from(&[self.master_seed, self.stream_index, tag]));
        rng.set_stream(tag);
        RngStream {
            master_seed: self.master_seed,
            stream_index: self.stream_index,
            rng,
        }
    }

    /// Uniform draw on the open interval (0,1).
    pub fn uniform(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }

    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub fn make_streams(master_seed: u64, n: usize) -> Vec<RngStream> {
    (0..n as u64)
        .map(|i| RngStream::new(master_seed, i))
        .collect()
}

/// Inverse-CDF draw from the jump law above `eps`: P(J > x) = (x/eps)^{-(1+alpha)}.
pub fn sample_truncated_jump(alpha: f64, eps: f64, u: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(param(format!("eps must be positive, got {eps}")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(param(format!("u must lie in (0,1), got {u}")));
    }
    Ok(eps * u.powf(-1.0 / (1.0 + alpha)))
}

/// Homogeneous Poisson event times on [0, horizon] via exponential spacings.
pub fn sample_poisson_events(rate: f64, horizon: f64, s: &mut RngStream) -> Vec<f64> {
    let mut out = Vec::new();
    if !(rate > 0.0) || !(horizon > 0.0) {
        return out;
    }
    let mut t = 0.0;
    loop {
        t += s.exp1() / rate;
        if t > horizon {
            return out;
        }
        out.push(t);
    }
}

/// Noncentral chi-square as a Poisson(nc/2) mixture of Gamma(df/2 + K, 2).
pub fn sample_ncchisq(df: f64, nc: f64, s: &mut RngStream) -> f64 {
    let k = if nc > 0.0 {
        let pois: f64 = Poisson::new(nc / 2.0).expect("positive mean").sample(s);
        pois
    } else {
        0.0
    };
    let shape = df / 2.0 + k;
    if shape <= 0.0 {
        return 0.0;
    }
    Gamma::new(shape, 2.0).expect("positive shape").sample(s)
}

/// Runs `f(i, stream_i)` for every replica on a pool of `threads` workers
/// (0 means the rayon default) and returns results in replica order.
pub fn replicate<T, F>(master_seed: u64, replicas: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, RngStream) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|i| f(i, RngStream::new(master_seed, i as u64)))
            .collect()
    })
}

/// Draws a uniform index in `0..n`.
pub fn uniform_index(s: &mut RngStream, n: usize) -> usize {
    s.random_range(0..n)
}
