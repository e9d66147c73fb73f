//! Uniform periodic grids and rectangle-rule integrals.

use crate::error::{DnlsError, Result};
use crate::C64;

/// A uniform periodic grid on `[-length/2, length/2)` with `n` samples.
///
/// The right endpoint is identified with the left one, so the last stored
/// point is `length/2 - h`. Wavenumbers follow FFT ordering with the Nyquist
/// mode carried as a negative frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    /// Creates a grid with `n` samples on an interval of the given length.
    ///
    /// `n` must be a power of two of at least 8 so that spectral transforms
    /// and the refinement helpers are well defined.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(DnlsError::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(DnlsError::InvalidGrid(format!(
                "length = {length} must be positive and finite"
            )));
        }
        Ok(Self { n, length })
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Interval length.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Sample spacing.
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Coordinate of sample `i`.
    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.length + self.h() * i as f64
    }

    /// All sample coordinates in storage order.
    pub fn x_points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Wavenumbers in FFT storage order, Nyquist negative.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let base = 2.0 * std::f64::consts::PI / self.length;
        (0..self.n)
            .map(|i| {
                let m = if i <= self.n / 2 - 1 {
                    i as isize
                } else {
                    i as isize - self.n as isize
                };
                base * m as f64
            })
            .collect()
    }

    /// Grid with the same extent and `factor` times as many samples.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(DnlsError::InvalidParameter(
                "refinement factor must be positive".into(),
            ));
        }
        Grid::new(self.n * factor, self.length)
    }

    /// Checks that a field has this grid's sample count.
    pub fn check(&self, field: &[C64]) -> Result<()> {
        if field.len() != self.n {
            return Err(DnlsError::GridMismatch {
                expected: self.n,
                got: field.len(),
            });
        }
        Ok(())
    }
}

/// Rectangle-rule L2 norm, `sqrt(h * sum |f_j|^2)`.
pub fn l2_norm(f: &[C64], grid: &Grid) -> f64 {
    (grid.h() * f.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
}

/// Rectangle-rule inner product `h * sum f_j conj(g_j)`, linear in `f`.
pub fn inner_product(f: &[C64], g: &[C64], grid: &Grid) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (a, b) in f.iter().zip(g) {
        acc += a * b.conj();
    }
    acc * grid.h()
}

/// Supremum norm over samples.
pub fn linf_norm(f: &[C64]) -> f64 {
    f.iter().map(|v| v.norm()).fold(0.0, f64::max)
}
