//! Binary field checkpoints.
//!
//! Layout (all integers `u32`, all reals `f64`, little endian):
//!
//! ```text
//! b"AFLOW1" | dim | points_per_dim | box_length | component count
//! then, per component, every lattice point in row-major FFT index order
//! (full lattice, last axis fastest) as interleaved (re, im) pairs.
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::SpectralVectorField;
use super::grid::{partner_index, Grid};
use crate::error::{FlowError, Result};

pub const MAGIC: &[u8; 6] = b"AFLOW1";

pub fn write_field<W: Write>(field: &SpectralVectorField, mut out: W) -> Result<()> {
    let grid = field.grid();
    let n = grid.points_per_dim();
    let h = grid.half_len();
    out.write_all(MAGIC)?;
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    out.write_all(&(n as u32).to_le_bytes())?;
    out.write_all(&grid.box_length().to_le_bytes())?;
    out.write_all(&(field.components().len() as u32).to_le_bytes())?;

    let mut row = Vec::with_capacity(n * 16);
    for c in field.components() {
        let leading = n.pow(grid.dim() as u32 - 1);
        for lead in 0..leading {
            row.clear();
            let partner_lead = partner_leading(grid, lead);
            for last in 0..n {
                let z = if last < h {
                    c[lead * h + last]
                } else {
                    c[partner_lead * h + partner_index(last, n)].conj()
                };
                row.extend_from_slice(&z.re.to_le_bytes());
                row.extend_from_slice(&z.im.to_le_bytes());
            }
            out.write_all(&row)?;
        }
    }
    Ok(())
}

pub fn read_field<R: Read>(mut input: R) -> Result<SpectralVectorField> {
    let mut magic = [0u8; 6];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(FlowError::Checkpoint("bad magic".into()));
    }
    let dim = read_u32(&mut input)? as usize;
    let n = read_u32(&mut input)? as usize;
    let box_length = f64::from_le_bytes(read_array(&mut input)?);
    let ncomp = read_u32(&mut input)? as usize;
    let grid = Grid::new(dim, n, box_length)?;
    if ncomp != dim {
        return Err(FlowError::Checkpoint(format!(
            "component count {ncomp} does not match dimension {dim}"
        )));
    }
    let h = grid.half_len();
    let mut comps = Vec::with_capacity(ncomp);
    let mut row = vec![0u8; n * 16];
    for _ in 0..ncomp {
        let mut c = Vec::with_capacity(grid.spectral_len());
        for _ in 0..n.pow(dim as u32 - 1) {
            input.read_exact(&mut row)?;
            for last in 0..h {
                let b = &row[last * 16..last * 16 + 16];
                let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
                c.push(Complex64::new(re, im));
            }
        }
        comps.push(c);
    }
    let field = SpectralVectorField::from_components(&grid, comps, false)?;
    Ok(field.clone().into_divergence_free().unwrap_or(field))
}

fn partner_leading(grid: &Grid, lead: usize) -> usize {
    let n = grid.points_per_dim();
    if grid.dim() == 2 {
        partner_index(lead, n)
    } else {
        partner_index(lead / n, n) * n + partner_index(lead % n, n)
    }
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(input)?))
}

fn read_array<R: Read, const N: usize>(input: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input.read_exact(&mut b)?;
    Ok(b)
}
