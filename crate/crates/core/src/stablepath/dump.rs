//! Versioned little-endian binary dump of a skeleton. Layout in
//! `docs/skeleton-format.md`.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::{JumpEvent, PathSkeleton, SmallJumpMode, StableParams};

pub const SKELETON_MAGIC: [u8; 8] = *b"SLTSKEL\0";
pub const SKELETON_VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn write_skeleton<W: Write>(path: &PathSkeleton, mut w: W) -> Result<()> {
    let mut buf = Vec::with_capacity(80 + 24 * path.jumps.len() + 16 * path.values.len());
    buf.extend_from_slice(&SKELETON_MAGIC);
    buf.extend_from_slice(&SKELETON_VERSION.to_le_bytes());
    for v in [
        path.params.alpha,
        path.params.a,
        path.horizon,
        path.eps,
        path.dt,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.push(match path.mode {
        SmallJumpMode::DriftOnly => 0,
        SmallJumpMode::Gaussian => 1,
    });
    for v in [
        path.seed,
        path.stream_index,
        path.jumps.len() as u64,
        path.values.len() as u64,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for j in &path.jumps {
        for v in [j.t, j.x_pre, j.dx] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in path.values.iter().chain(path.continuous.iter()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err)
}

struct Cursor<R> {
    r: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.r.read_exact(&mut b).map_err(io_err)?;
        Ok(b)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64s(&mut self, n: u64) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn read_skeleton<R: Read>(r: R) -> Result<PathSkeleton> {
    let mut c = Cursor { r };
    if c.bytes::<8>()? != SKELETON_MAGIC {
        return Err(Error::Format("not a skeleton dump (bad magic)".into()));
    }
    let version = u32::from_le_bytes(c.bytes()?);
    if version != SKELETON_VERSION {
        return Err(Error::Format(format!(
            "unsupported skeleton version {version}"
        )));
    }
    let (alpha, a, horizon, eps, dt) = (c.f64()?, c.f64()?, c.f64()?, c.f64()?, c.f64()?);
    let mode = match c.bytes::<1>()?[0] {
        0 => SmallJumpMode::DriftOnly,
        1 => SmallJumpMode::Gaussian,
        m => return Err(Error::Format(format!("unknown small-jump mode {m}"))),
    };
    let (seed, stream_index, n_jumps, n_grid) = (c.u64()?, c.u64()?, c.u64()?, c.u64()?);
    let mut jumps = Vec::with_capacity(n_jumps.min(1 << 24) as usize);
    for _ in 0..n_jumps {
        jumps.push(JumpEvent {
            t: c.f64()?,
            x_pre: c.f64()?,
            dx: c.f64()?,
        });
    }
    let values = c.f64s(n_grid)?;
    let continuous = c.f64s(n_grid)?;
    Ok(PathSkeleton {
        params: StableParams::new(alpha, a)?,
        horizon,
        eps,
        dt,
        mode,
        seed,
        stream_index,
        values,
        continuous,
        jumps,
    })
}
