//! FFT helpers, spectral derivatives, band-limited resampling.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::grid::Grid;
use crate::C64;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn with_plan(n: usize, inverse: bool, buf: &mut [C64]) {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        let plan = cache
            .entry((n, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone();
        plan.process(buf);
    });
}

/// In-place forward DFT (no normalization).
pub fn fft_forward(buf: &mut [C64]) {
    with_plan(buf.len(), false, buf);
}

/// In-place inverse DFT, normalized by `1/n`.
pub fn fft_inverse(buf: &mut [C64]) {
    let n = buf.len();
    with_plan(n, true, buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Forward DFT into a new vector.
pub fn to_spectrum(f: &[C64]) -> Vec<C64> {
    let mut v = f.to_vec();
    fft_forward(&mut v);
    v
}

/// Inverse DFT into a new vector.
pub fn from_spectrum(vhat: &[C64]) -> Vec<C64> {
    let mut v = vhat.to_vec();
    fft_inverse(&mut v);
    v
}

/// Spectral derivative of the given order.
///
/// Odd orders zero the Nyquist mode so that the result of differentiating a
/// real-valued sample pattern stays conjugate-symmetric.
pub fn spectral_derivative(f: &[C64], grid: &Grid, order: u32) -> Result<Vec<C64>> {
    grid.check(f)?;
    let mut vhat = to_spectrum(f);
    let k = grid.wavenumbers();
    let n = grid.n();
    for (j, v) in vhat.iter_mut().enumerate() {
        let ik = C64::new(0.0, k[j]);
        *v *= ik.powu(order);
    }
    if order % 2 == 1 {
        vhat[n / 2] = C64::new(0.0, 0.0);
    }
    fft_inverse(&mut vhat);
    Ok(vhat)
}

/// Band-limited upsampling by an integer factor.
///
/// The spectrum is zero-padded symmetrically; the Nyquist coefficient is
/// split in half between the positive and negative slots so the refined
/// samples interpolate the originals exactly.
pub fn upsample(f: &[C64], factor: usize) -> Vec<C64> {
    if factor <= 1 {
        return f.to_vec();
    }
    let n = f.len();
    let vhat = to_spectrum(f);
    let mut padded = vec![C64::new(0.0, 0.0); n * factor];
    padded[..n / 2].copy_from_slice(&vhat[..n / 2]);
    padded[n * factor - n / 2..].copy_from_slice(&vhat[n / 2..]);
    let half = 0.5 * vhat[n / 2];
    padded[n / 2] = half;
    padded[n * factor - n / 2] = half;
    fft_inverse(&mut padded);
    let scale = factor as f64;
    padded.iter_mut().for_each(|v| *v *= scale);
    padded
}

/// Keeps every `factor`-th sample, starting at index 0.
pub fn downsample_stride(f: &[C64], factor: usize) -> Vec<C64> {
    f.iter().step_by(factor.max(1)).copied().collect()
}

/// Translates by `shift` and rotates the global phase by `phase`.
///
/// The translation is spectral, so `shift` need not be a multiple of the
/// sample spacing; positive `shift` moves features toward smaller `x`
/// (the returned field samples `exp(i phase) f(x + shift)`).
pub fn translate_phase(f: &[C64], grid: &Grid, shift: f64, phase: f64) -> Result<Vec<C64>> {
    grid.check(f)?;
    let mut vhat = to_spectrum(f);
    let k = grid.wavenumbers();
    for (j, v) in vhat.iter_mut().enumerate() {
        *v *= C64::from_polar(1.0, k[j] * shift);
    }
    fft_inverse(&mut vhat);
    let rot = C64::from_polar(1.0, phase);
    vhat.iter_mut().for_each(|v| *v *= rot);
    Ok(vhat)
}

/// Two-thirds dealiasing mask in FFT storage order.
pub fn dealias_mask(grid: &Grid) -> Vec<f64> {
    let k = grid.wavenumbers();
    let kmax = k.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cutoff = (2.0 / 3.0) * kmax;
    k.iter()
        .map(|v| if v.abs() <= cutoff { 1.0 } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(grid: &Grid, m: f64) -> Vec<C64> {
        grid.x_points()
            .iter()
            .map(|&x| C64::from_polar(1.0, m * x))
            .collect()
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = Grid::new(64, 2.0 * std::f64::consts::PI).unwrap();
        let f = wave(&g, 3.0);
        let d = spectral_derivative(&f, &g, 1).unwrap();
        for (a, b) in d.iter().zip(&f) {
            let expect = C64::new(0.0, 3.0) * b;
            assert!((a - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn upsample_interpolates_original_points() {
        let g = Grid::new(32, 5.0).unwrap();
        let f: Vec<C64> = g
            .x_points()
            .iter()
            .map(|&x| C64::new((-x * x).exp(), (0.7 * x).sin()))
            .collect();
        let fine = upsample(&f, 4);
        for (j, v) in f.iter().enumerate() {
            assert!((fine[4 * j] - v).norm() < 1e-12);
        }
    }

    #[test]
    fn translate_by_grid_step_rotates_samples() {
        let g = Grid::new(64, 8.0).unwrap();
        let f: Vec<C64> = g
            .x_points()
            .iter()
            .map(|&x| C64::new((-(x * x)).exp(), 0.0))
            .collect();
        let shifted = translate_phase(&f, &g, g.h(), 0.0).unwrap();
        for j in 0..g.n() - 1 {
            assert!((shifted[j] - f[j + 1]).norm() < 1e-10);
        }
    }
}
