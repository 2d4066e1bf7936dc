//! `HSF1` binary snapshots: magic, `u32 n, k, m`, `f64 L, t`, then `m^n`
//! `(re, im)` pairs, all little-endian, row-major.

use num_complex::Complex64;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Grid, SplitSignature};

pub const MAGIC: &[u8; 4] = b"HSF1";

pub fn write_snapshot<W: Write>(mut w: W, field: &ComplexField, t: f64) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    for v in [g.sig().n(), g.sig().k(), g.points()] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&g.half_width().to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * field.samples().len());
    for c in field.samples() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads one snapshot, returning the field and its time stamp.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(ComplexField, f64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let mut u = [0u8; 4];
    let mut read_u32 = |r: &mut R| -> Result<usize> {
        r.read_exact(&mut u)?;
        Ok(u32::from_le_bytes(u) as usize)
    };
    let n = read_u32(&mut r)?;
    let k = read_u32(&mut r)?;
    let m = read_u32(&mut r)?;
    let mut f = [0u8; 8];
    r.read_exact(&mut f)?;
    let l = f64::from_le_bytes(f);
    r.read_exact(&mut f)?;
    let t = f64::from_le_bytes(f);
    let sig = SplitSignature::new(n, k).map_err(|e| Error::Snapshot(e.to_string()))?;
    let grid = Grid::new(sig, l, m).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut bytes = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut bytes).map_err(|e| Error::Snapshot(format!("truncated payload: {e}")))?;
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok((ComplexField::new(grid, samples)?, t))
}
