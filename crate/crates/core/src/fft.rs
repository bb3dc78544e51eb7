//! Two-dimensional complex FFT over row-major `[nx][ny]` fields.
//!
//! The forward transform leaves the spectrum in transposed layout
//! `[ky][kx]`; spectral multipliers are stored in the same layout so no
//! transpose back is needed before the inverse.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Grids below this many points are transformed on the calling thread.
const PARALLEL_THRESHOLD: usize = 96 * 96;

pub(crate) struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    tmp: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            tmp: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    /// Spatial `[nx][ny]` to spectral `[ky][kx]`, in place.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        rows(data, self.ny, &self.fwd_y);
        transpose(data, &mut self.tmp, self.nx, self.ny);
        rows(&mut self.tmp, self.nx, &self.fwd_x);
        data.copy_from_slice(&self.tmp);
    }

    /// Spectral `[ky][kx]` back to spatial `[nx][ny]`, normalized.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        rows(data, self.nx, &self.inv_x);
        transpose(data, &mut self.tmp, self.ny, self.nx);
        rows(&mut self.tmp, self.ny, &self.inv_y);
        let scale = 1.0 / self.len() as f64;
        for (d, t) in data.iter_mut().zip(&self.tmp) {
            *d = t * scale;
        }
    }
}

fn rows(data: &mut [Complex64], row_len: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    if data.len() >= PARALLEL_THRESHOLD {
        data.par_chunks_mut(row_len).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, row| fft.process_with_scratch(row, scratch),
        );
    } else {
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        for row in data.chunks_mut(row_len) {
            fft.process_with_scratch(row, &mut scratch);
        }
    }
}

/// `src` is `[rows][cols]`, `dst` becomes `[cols][rows]`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_recovers_input() {
        let (nx, ny) = (12, 10);
        let orig: Vec<Complex64> = (0..nx * ny)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        let mut fft = Fft2::new(nx, ny);
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn forward_layout_is_ky_major() {
        // a pure x-mode lands at spectral index [ky=0][kx=1]
        let (nx, ny) = (8, 6);
        let mut data: Vec<Complex64> = (0..nx * ny)
            .map(|idx| {
                let ix = idx / ny;
                let phase = 2.0 * std::f64::consts::PI * ix as f64 / nx as f64;
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        let mut fft = Fft2::new(nx, ny);
        fft.forward(&mut data);
        let peak = data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak, 1);
        assert!((data[1].re - (nx * ny) as f64).abs() < 1e-9);
    }
}
