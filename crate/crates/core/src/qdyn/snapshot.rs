//! Binary snapshot files for Ψ.
//!
//! Layout, all little-endian: the 8-byte magic `PWSNAP01`, axis count as u64, points per
//! axis as u64 (one per axis), extent per axis as f64, time as f64, then `re, im` pairs
//! as f64 in row-major node order.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::WaveFunction;
use crate::grid::GridSpec;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"PWSNAP01";

pub fn write_snapshot(psi: &WaveFunction, out: &mut impl Write) -> Result<()> {
    let g = psi.grid();
    out.write_all(MAGIC)?;
    out.write_all(&(g.axes() as u64).to_le_bytes())?;
    for _ in 0..g.axes() {
        out.write_all(&(g.points() as u64).to_le_bytes())?;
    }
    for _ in 0..g.axes() {
        out.write_all(&g.extent().to_le_bytes())?;
    }
    out.write_all(&psi.time().to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * g.len());
    for z in psi.amplitudes() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(input: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(input)?))
}

pub fn read_snapshot(input: &mut impl Read) -> Result<WaveFunction> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let axes = read_u64(input)? as usize;
    if axes == 0 || axes > crate::grid::MAX_AXES {
        return Err(Error::Snapshot(format!("unsupported axis count {axes}")));
    }
    let points: Vec<u64> = (0..axes).map(|_| read_u64(input)).collect::<Result<_>>()?;
    let extents: Vec<f64> = (0..axes).map(|_| read_f64(input)).collect::<Result<_>>()?;
    if points.iter().any(|&p| p != points[0]) || extents.iter().any(|&e| e != extents[0]) {
        return Err(Error::Snapshot("only isotropic grids are supported".into()));
    }
    let grid = GridSpec::new(axes, points[0] as usize, extents[0])
        .map_err(|e| Error::Snapshot(e.to_string()))?;
    let time = read_f64(input)?;
    let mut raw = vec![0u8; 16 * grid.len()];
    input.read_exact(&mut raw)?;
    let amplitudes = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    WaveFunction::new(grid, amplitudes, time)
}
