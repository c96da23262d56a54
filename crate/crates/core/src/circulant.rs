//! Circulant linear systems and the plain discrete Fourier transform that
//! diagonalizes them.
//!
//! A circulant matrix is fixed by its first row `c`: row `s` holds
//! `c[(q - s) mod n]` in column `q`, so every row is the previous one
//! shifted right. Its spectrum is the minus-sign DFT of `c`, and solving a
//! system collapses to two transforms and a pointwise division. Transforms
//! are written as direct O(n^2) sums; dimensions stay small here and an
//! explicit sign convention is worth more than an FFT.

use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Spectral coefficients at or below this fraction of the largest modulus
/// count as vanishing.
pub const SINGULARITY_CUTOFF: f64 = 1e-12;

/// Failure modes of circulant solves.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum CirculantError {
    /// A spectral coefficient vanishes, so the system has no unique solution.
    #[error("singular circulant system: spectral coefficient {index} vanishes")]
    SingularSystem { index: usize },
}

/// Unnormalized transform with an explicit sign:
/// `y[r] = sum_m x[m] e^{sign 2 pi i r m / n}`.
///
/// `sign` must be `+1` or `-1`.
pub fn dft(x: &[Complex64], sign: i32) -> Vec<Complex64> {
    assert!(sign == 1 || sign == -1, "dft sign must be +1 or -1");
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    // exponents are reduced mod n so the angle never grows with r*m
    let roots: Vec<Complex64> = (0..n)
        .map(|t| Complex64::from_polar(1.0, f64::from(sign) * TAU * t as f64 / n as f64))
        .collect();
    (0..n)
        .map(|r| (0..n).map(|m| x[m] * roots[r * m % n]).sum())
        .collect()
}

/// Inverts `dft` called with the same `sign`: the opposite-sign transform
/// divided by the length.
pub fn idft(y: &[Complex64], sign: i32) -> Vec<Complex64> {
    let n = y.len();
    let mut x = dft(y, -sign);
    for v in &mut x {
        *v /= n as f64;
    }
    x
}

/// A circulant system, stored as its first row plus the precomputed spectrum.
#[derive(Clone, Debug)]
pub struct CirculantSystem {
    first_row: Vec<f64>,
    eigenvalues: Vec<Complex64>,
}

/// Builds the system for a real first row.
///
/// The spectrum is `eigenvalues[r] = sum_m c[m] e^{-2 pi i r m / n}`.
pub fn build_system(first_row: &[f64]) -> CirculantSystem {
    assert!(!first_row.is_empty(), "circulant system needs at least one row");
    let row: Vec<Complex64> = first_row.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    CirculantSystem {
        eigenvalues: dft(&row, -1),
        first_row: first_row.to_vec(),
    }
}

impl CirculantSystem {
    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    /// The defining first row.
    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    /// Minus-sign DFT of the first row.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Ratio of the largest to the smallest spectral modulus.
    pub fn condition_number(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for g in &self.eigenvalues {
            lo = lo.min(g.norm());
            hi = hi.max(g.norm());
        }
        hi / lo
    }

    fn singular_index(&self) -> Option<usize> {
        let largest = self
            .eigenvalues
            .iter()
            .map(|g| g.norm())
            .fold(0.0, f64::max);
        self.eigenvalues
            .iter()
            .position(|g| g.norm() <= SINGULARITY_CUTOFF * largest)
    }

    /// Multiplies by a vector, straight off the first row:
    /// `y[s] = sum_m c[m] x[(s + m) mod n]`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "vector length must match the system");
        (0..n)
            .map(|s| (0..n).map(|m| x[(s + m) % n] * self.first_row[m]).sum())
            .collect()
    }

    /// Solves `C x = rhs`.
    ///
    /// A plus-sign transform carries the product onto the spectrum,
    /// `dft(C x, +1)[r] = eigenvalues[r] dft(x, +1)[r]`, so the solve is one
    /// division per frequency.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>, CirculantError> {
        assert_eq!(rhs.len(), self.dim(), "right-hand side length must match the system");
        if let Some(index) = self.singular_index() {
            return Err(CirculantError::SingularSystem { index });
        }
        let mut freq = dft(rhs, 1);
        for (f, g) in freq.iter_mut().zip(&self.eigenvalues) {
            *f /= g;
        }
        Ok(idft(&freq, 1))
    }

    /// First row of the inverse matrix, itself circulant.
    pub fn inverse_first_row(&self) -> Result<Vec<Complex64>, CirculantError> {
        if let Some(index) = self.singular_index() {
            return Err(CirculantError::SingularSystem { index });
        }
        let reciprocal: Vec<Complex64> = self.eigenvalues.iter().map(|g| g.inv()).collect();
        Ok(idft(&reciprocal, -1))
    }
}
