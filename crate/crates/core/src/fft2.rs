//! Separable 2-D FFT over row-major complex buffers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// In-place unnormalized 2-D transform of a `width`x`height` buffer.
pub fn fft2_in_place(buf: &mut [Complex64], width: usize, height: usize, dir: Direction) {
    debug_assert_eq!(buf.len(), width * height);
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = match dir {
        Direction::Forward => (planner.plan_fft_forward(width), planner.plan_fft_forward(height)),
        Direction::Inverse => (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height)),
    };
    // Rows are contiguous: process all of them in one call.
    row_fft.process(buf);

    let mut col = vec![Complex64::new(0.0, 0.0); height];
    for c in 0..width {
        for (r, v) in col.iter_mut().enumerate() {
            *v = buf[r * width + c];
        }
        col_fft.process(&mut col);
        for (r, v) in col.iter().enumerate() {
            buf[r * width + c] = *v;
        }
    }
}

pub fn forward(raster: &Raster) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = raster.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut buf, raster.width(), raster.height(), Direction::Forward);
    buf
}

/// Normalized inverse; returns the real parts and the largest imaginary magnitude.
pub fn inverse_real(mut spectrum: Vec<Complex64>, width: usize, height: usize) -> (Raster, f64) {
    fft2_in_place(&mut spectrum, width, height, Direction::Inverse);
    let scale = 1.0 / (width * height) as f64;
    let mut max_imag: f64 = 0.0;
    let data = spectrum
        .iter()
        .map(|z| {
            max_imag = max_imag.max((z.im * scale).abs());
            z.re * scale
        })
        .collect();
    let raster = Raster::new(width, height, data).expect("spectrum matches its dimensions");
    (raster, max_imag)
}
