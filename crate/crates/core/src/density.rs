//! Density matrices and the comparisons reconstruction is judged by.
//!
//! Matrices are validated once at construction: Hermitian and unit trace to
//! a tight tolerance, positive semidefinite up to a looser eigenvalue floor
//! because statistical noise legitimately drives small eigenvalues slightly
//! negative.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Entrywise Hermiticity and trace tolerance.
pub const STRUCTURE_TOLERANCE: f64 = 1e-10;

/// Matrices are accepted while their smallest eigenvalue stays above this.
pub const EIGENVALUE_FLOOR: f64 = -1e-8;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("matrix is {rows} x {cols}, need a nonempty square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: worst entry mismatch {defect}")]
    NotHermitian { defect: f64 },
    #[error("trace is {trace} instead of 1")]
    TraceNotOne { trace: Complex64 },
    #[error("matrix has eigenvalue {min_eigenvalue}, below the floor")]
    NotPositive { min_eigenvalue: f64 },
    #[error("dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("state vector has vanishing norm")]
    ZeroVector,
    #[error("matrix clips to zero trace, nothing to normalize")]
    ZeroTrace,
    #[error("rank must be between 1 and {dim}, got {rank}")]
    InvalidRank { rank: usize, dim: usize },
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and the eigenvalue floor.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self, DensityError> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(DensityError::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
        }
        let n = mat.nrows();
        let mut defect = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                defect = defect.max((mat[(p, q)] - mat[(q, p)].conj()).norm());
            }
        }
        if defect > STRUCTURE_TOLERANCE {
            return Err(DensityError::NotHermitian { defect });
        }
        let trace = mat.trace();
        if (trace - 1.0).norm() > STRUCTURE_TOLERANCE {
            return Err(DensityError::TraceNotOne { trace });
        }
        let min_eigenvalue = hermitian_eigen(&mat).0.min();
        if min_eigenvalue < EIGENVALUE_FLOOR {
            return Err(DensityError::NotPositive { min_eigenvalue });
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn entry(&self, p: usize, q: usize) -> Complex64 {
        self.mat[(p, q)]
    }

    /// The maximally mixed state `1/n`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mat = DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0));
        Self { mat }
    }
}

fn hermitian_eigen(mat: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let eigen = mat.clone().symmetric_eigen();
    (eigen.eigenvalues, eigen.eigenvectors)
}

/// `U f(d) U^dagger` from an eigendecomposition.
fn rebuild(
    eigenvalues: &DVector<f64>,
    vectors: &DMatrix<Complex64>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<Complex64> {
    let mapped = DVector::from_iterator(
        eigenvalues.len(),
        eigenvalues.iter().map(|&w| Complex64::new(f(w), 0.0)),
    );
    vectors * DMatrix::from_diagonal(&mapped) * vectors.adjoint()
}

/// Draws a rank-`rank` density matrix, deterministically in `seed`.
///
/// An n x rank matrix of independent complex standard normals G gives
/// G G^dagger normalized to unit trace; its rank is `rank` with probability
/// one.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix, DensityError> {
    if dim == 0 {
        return Err(DensityError::NotSquare { rows: 0, cols: 0 });
    }
    if rank < 1 || rank > dim {
        return Err(DensityError::InvalidRank { rank, dim });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, rank, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let mut rho = &g * g.adjoint();
    let trace = rho.trace().re;
    rho /= Complex64::new(trace, 0.0);
    DensityMatrix::new(rho)
}

/// `|v><v| / <v|v>`.
pub fn pure_density(vector: &[Complex64]) -> Result<DensityMatrix, DensityError> {
    let norm_sqr: f64 = vector.iter().map(|c| c.norm_sqr()).sum();
    if norm_sqr.sqrt() < 1e-12 {
        return Err(DensityError::ZeroVector);
    }
    let n = vector.len();
    let mat = DMatrix::from_fn(n, n, |p, q| vector[p] * vector[q].conj() / norm_sqr);
    DensityMatrix::new(mat)
}

/// Uhlmann fidelity `(tr sqrt(sqrt(a) b sqrt(a)))^2`, clamped to [0, 1].
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, DensityError> {
    if a.dim() != b.dim() {
        return Err(DensityError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let (wa, va) = hermitian_eigen(a.matrix());
    let sqrt_a = rebuild(&wa, &va, |w| w.max(0.0).sqrt());
    let sandwich = &sqrt_a * b.matrix() * &sqrt_a;
    let (wm, _) = hermitian_eigen(&sandwich);
    let root_sum: f64 = wm.iter().map(|&w| w.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Trace distance: half the sum of absolute eigenvalues of `a - b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, DensityError> {
    if a.dim() != b.dim() {
        return Err(DensityError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let diff = a.matrix() - b.matrix();
    let (w, _) = hermitian_eigen(&diff);
    Ok(0.5 * w.iter().map(|&x| x.abs()).sum::<f64>())
}

/// Projects an arbitrary matrix to a nearby density matrix: Hermitize, clip
/// negative eigenvalues to zero, renormalize the trace.
///
/// This is plain eigenvalue clipping, not a likelihood fit; reports carry a
/// flag recording which post-processing produced them.
pub fn nearest_physical(mat: &DMatrix<Complex64>) -> Result<DensityMatrix, DensityError> {
    if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
        return Err(DensityError::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
    }
    let hermitized = (mat + mat.adjoint()).map(|c| c * 0.5);
    let (w, v) = hermitian_eigen(&hermitized);
    let clipped: Vec<f64> = w.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total < 1e-12 {
        return Err(DensityError::ZeroTrace);
    }
    let diagonal = DVector::from_iterator(
        clipped.len(),
        clipped.iter().map(|&x| Complex64::new(x / total, 0.0)),
    );
    let mat = &v * DMatrix::from_diagonal(&diagonal) * v.adjoint();
    Ok(DensityMatrix { mat })
}
