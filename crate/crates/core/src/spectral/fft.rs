//! Multi-dimensional real transforms over the half-complex layout.
//!
//! The last axis uses a real-to-complex transform; the leading axes are
//! complex transforms applied in place with a gather/scatter over blocks of
//! columns.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::Fft;

use super::grid::Grid;

const COLUMN_BLOCK: usize = 8;

/// Unscaled forward transform of a real array.
pub(crate) fn forward_unscaled(grid: &Grid, input: &[f64]) -> Vec<Complex64> {
    let n = grid.points_per_dim();
    let h = grid.half_len();
    let plans = grid.plans();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
    let r2c = plans.r2c.clone();
    out.par_chunks_mut(h).zip(input.par_chunks(n)).for_each_init(
        || (r2c.make_input_vec(), r2c.make_scratch_vec()),
        |(buf, scratch), (dst, src)| {
            buf.copy_from_slice(src);
            r2c.process_with_scratch(buf, dst, scratch)
                .expect("r2c buffer sizes are fixed by the grid");
        },
    );
    for axis in (0..grid.dim() - 1).rev() {
        transform_axis(grid, &mut out, axis, &plans.forward);
    }
    out
}

/// Unscaled inverse transform; consumes the spectral buffer.
pub(crate) fn backward_unscaled(grid: &Grid, mut spec: Vec<Complex64>) -> Vec<f64> {
    let n = grid.points_per_dim();
    let h = grid.half_len();
    let plans = grid.plans();
    for axis in 0..grid.dim() - 1 {
        transform_axis(grid, &mut spec, axis, &plans.inverse);
    }
    let mut out = vec![0.0; grid.physical_len()];
    let c2r = plans.c2r.clone();
    out.par_chunks_mut(n).zip(spec.par_chunks_mut(h)).for_each_init(
        || c2r.make_scratch_vec(),
        |scratch, (dst, src)| {
            // The DC and Nyquist columns are real for Hermitian input; drop
            // the round-off imaginary part the real transform would reject.
            src[0].im = 0.0;
            src[h - 1].im = 0.0;
            c2r.process_with_scratch(src, dst, scratch)
                .expect("c2r buffer sizes are fixed by the grid");
        },
    );
    out
}

/// In-place complex transform along a leading axis of the spectral layout.
fn transform_axis(grid: &Grid, data: &mut [Complex64], axis: usize, fft: &Arc<dyn Fft<f64>>) {
    let n = grid.points_per_dim();
    let h = grid.half_len();
    let dim = grid.dim();
    // stride between consecutive entries along `axis`
    let stride = n.pow((dim - 2 - axis) as u32) * h;
    let block_len = n * stride;
    data.par_chunks_mut(block_len).for_each_init(
        || {
            (
                vec![Complex64::new(0.0, 0.0); n * COLUMN_BLOCK],
                vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            )
        },
        |(lines, scratch), block| {
            let mut j0 = 0;
            while j0 < stride {
                let width = COLUMN_BLOCK.min(stride - j0);
                for p in 0..n {
                    let row = &block[p * stride + j0..p * stride + j0 + width];
                    for (b, &c) in row.iter().enumerate() {
                        lines[b * n + p] = c;
                    }
                }
                fft.process_with_scratch(&mut lines[..width * n], scratch);
                for p in 0..n {
                    let row = &mut block[p * stride + j0..p * stride + j0 + width];
                    for (b, c) in row.iter_mut().enumerate() {
                        *c = lines[b * n + p];
                    }
                }
                j0 += width;
            }
        },
    );
}
