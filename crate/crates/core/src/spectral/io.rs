//! `SPF1` binary field format: a 16-byte header (`b"SPF1"`, `dim` as
//! little-endian `u32`, `n` as little-endian `u64`) followed by `n^dim`
//! little-endian `f64` pairs `(re, im)` in row-major node order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

use super::{SpectralField, TorusGrid};

pub const MAGIC: &[u8; 4] = b"SPF1";

pub fn write_field<T: Real, W: Write>(u: &SpectralField<T>, mut w: W) -> Result<()> {
    let g = u.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.n() as u64).to_le_bytes())?;
    for c in u.samples() {
        w.write_all(&c.re.as_f64().to_le_bytes())?;
        w.write_all(&c.im.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<T: Real, R: Read>(mut r: R) -> Result<SpectralField<T>> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|e| Error::Format(format!("short header: {e}")))?;
    if &header[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected SPF1".into()));
    }
    let dim = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    let n = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let grid = TorusGrid::new(dim, n).map_err(|e| Error::Format(e.to_string()))?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut buf = [0u8; 16];
    for _ in 0..grid.len() {
        r.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
        samples.push(Cplx::new(T::lit(re), T::lit(im)));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    SpectralField::from_samples(&grid, samples)
}
