//! Linear inversion of measurement tables back to density matrices.
//!
//! Fourier transforming each row of the probability table decouples the
//! unknowns diagonal by diagonal: frequency slice `k` involves only the
//! entries `rho_{q+k,q}`. Each slice is one circulant system whose first row
//! comes from the Gram weights, so the whole inversion is (n+1)/2 small
//! solves plus conjugate symmetry. Odd dimension is essential: for even `n`
//! the slice at `k = n/2` pairs every unknown with its own conjugate, the
//! imaginary parts cancel out of all probabilities, and nothing can bring
//! them back.

use crate::circulant::{build_system, dft, CirculantError, CirculantSystem, SINGULARITY_CUTOFF};
use crate::density::{nearest_physical, DensityError, DensityMatrix};
use crate::equidistant::{
    build_state_set, spectrum, EquidistantConfig, EquidistantError, Spectrum,
};
use crate::measurement::{
    born_probabilities, expansion_values, MeasurementError, ProbabilityTable,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Overlap moduli below this leave every off-diagonal system hopelessly
/// close to singular.
pub const DEGENERATE_OVERLAP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TomographyError {
    #[error("dimension {dim} is even: the imaginary parts of the entries rho[q+{half}][q] cancel out of every outcome probability and cannot be recovered; use an odd dimension", half = .dim / 2)]
    EvenDimension { dim: usize },
    #[error("dimension {dim} is odd; this demonstration needs an even one")]
    OddDimension { dim: usize },
    #[error("overlap modulus {alpha_mod} is below {DEGENERATE_OVERLAP}; the measurement no longer resolves off-diagonal entries")]
    DegenerateConfiguration { alpha_mod: f64 },
    #[error("diagonal {diagonal}: singular system, spectral coefficient {index} vanishes")]
    SingularSystem { diagonal: usize, index: usize },
    #[error("table is {table}-dimensional but the configuration says {config}")]
    DimensionMismatch { table: usize, config: usize },
    #[error("epsilon must lie in (0, {max}], got {epsilon}")]
    InvalidEpsilon { epsilon: f64, max: f64 },
    #[error("diagonal index {k} exceeds {max} for dimension {dim}")]
    DiagonalOutOfRange { k: usize, max: usize, dim: usize },
    #[error(transparent)]
    Spectrum(#[from] EquidistantError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// Fourier transform of a probability table along the label index:
/// `values[s][k] = sum_j e^{2 pi i k j / n} P[s][j]`.
#[derive(Clone, Debug)]
pub struct FourierTable {
    values: Vec<Vec<Complex64>>,
}

impl FourierTable {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    pub fn value(&self, s: usize, k: usize) -> Complex64 {
        self.values[s][k]
    }

    /// Right-hand side of the diagonal-`k` system: column `k` across shifts.
    pub fn slice(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|s| self.values[s][k]).collect()
    }
}

/// Transforms every row; row `s` of the result is the plus-sign DFT of row
/// `s` of the table.
pub fn fourier_transform_probabilities(table: &ProbabilityTable) -> FourierTable {
    let values = table
        .values()
        .iter()
        .map(|row| {
            let complex_row: Vec<Complex64> =
                row.iter().map(|&p| Complex64::new(p, 0.0)).collect();
            dft(&complex_row, 1)
        })
        .collect();
    FourierTable { values }
}

/// The circulant system tying frequency slice `k` to the diagonal entries
/// `rho_{q+k,q}`: first row `sqrt(λ_{m+k} λ_m)`.
pub fn diagonal_system(
    config: &EquidistantConfig,
    k: usize,
) -> Result<CirculantSystem, TomographyError> {
    let n = config.dim();
    let max = (n - 1) / 2;
    if k > max {
        return Err(TomographyError::DiagonalOutOfRange { k, max, dim: n });
    }
    let spectrum = spectrum(config)?;
    Ok(diagonal_system_from(&spectrum, k))
}

fn diagonal_system_from(spectrum: &Spectrum, k: usize) -> CirculantSystem {
    let n = spectrum.dim();
    let weights = spectrum.lambdas();
    let first_row: Vec<f64> = (0..n)
        .map(|m| (weights[(m + k) % n] * weights[m]).sqrt())
        .collect();
    build_system(&first_row)
}

/// Output of one linear inversion.
#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    /// Raw solution of the diagonal systems; Hermitian by assembly but not
    /// necessarily positive.
    pub rho_raw: DMatrix<Complex64>,
    /// Eigenvalue-clipped projection of `rho_raw`, unless projection was
    /// switched off.
    pub rho_physical: Option<DensityMatrix>,
    /// max|γ| / min|γ| of the diagonal systems, k = 0 first.
    pub condition_numbers: Vec<f64>,
    /// Largest deviation between the probabilities `rho_raw` predicts and
    /// the input table.
    pub residual: f64,
}

/// Knobs for `reconstruct_with`.
#[derive(Clone, Copy, Debug)]
pub struct ReconstructOptions {
    /// Project the raw inversion back onto valid density matrices.
    pub project: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { project: true }
    }
}

/// Inverts a probability table with default options (projection on).
pub fn reconstruct(
    table: &ProbabilityTable,
    config: &EquidistantConfig,
) -> Result<ReconstructionReport, TomographyError> {
    reconstruct_with(table, config, ReconstructOptions::default())
}

/// Inverts a probability table: one circulant solve per diagonal
/// `k = 0 ..= (n-1)/2`, conjugate symmetry filling the rest.
pub fn reconstruct_with(
    table: &ProbabilityTable,
    config: &EquidistantConfig,
    options: ReconstructOptions,
) -> Result<ReconstructionReport, TomographyError> {
    let n = config.dim();
    if table.dim() != n {
        return Err(TomographyError::DimensionMismatch { table: table.dim(), config: n });
    }
    if n.is_multiple_of(2) {
        return Err(TomographyError::EvenDimension { dim: n });
    }
    if config.alpha_mod() < DEGENERATE_OVERLAP {
        return Err(TomographyError::DegenerateConfiguration { alpha_mod: config.alpha_mod() });
    }
    let spectrum = spectrum(config)?;
    let fourier = fourier_transform_probabilities(table);
    let mut rho_raw = DMatrix::from_element(n, n, Complex64::ZERO);
    let mut condition_numbers = Vec::with_capacity(n.div_ceil(2));
    for k in 0..=(n - 1) / 2 {
        let system = diagonal_system_from(&spectrum, k);
        let solution = system.solve(&fourier.slice(k)).map_err(
            |CirculantError::SingularSystem { index }| TomographyError::SingularSystem {
                diagonal: k,
                index,
            },
        )?;
        condition_numbers.push(system.condition_number());
        for (q, &x) in solution.iter().enumerate() {
            rho_raw[((q + k) % n, q)] = x;
            if k > 0 {
                rho_raw[(q, (q + k) % n)] = x.conj();
            }
        }
    }
    let predicted = expansion_values(&rho_raw, &spectrum);
    let mut residual = 0.0f64;
    for (s, row) in predicted.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            residual = residual.max((value - table.value(s, j)).norm());
        }
    }
    let rho_physical = if options.project {
        Some(nearest_physical(&rho_raw)?)
    } else {
        None
    };
    Ok(ReconstructionReport { rho_raw, rho_physical, condition_numbers, residual })
}

/// Direct closed-form inversion, written as the literal triple sum over the
/// reciprocal spectral coefficients rather than through the circulant
/// solver:
///
/// `rho_{q+k,q} = (1/n) sum_{r,l,j} (γ_r^* / |γ_r|^2) e^{2 pi i ((l-q) r + k j) / n} P[l][j]`
///
/// with `γ_r = sum_m sqrt(λ_{m+k} λ_m) e^{-2 pi i m r / n}`. Kept
/// independent of `reconstruct` so the two can check each other.
pub fn closed_form_reconstruct(
    table: &ProbabilityTable,
    config: &EquidistantConfig,
) -> Result<DMatrix<Complex64>, TomographyError> {
    let n = config.dim();
    if table.dim() != n {
        return Err(TomographyError::DimensionMismatch { table: table.dim(), config: n });
    }
    if n.is_multiple_of(2) {
        return Err(TomographyError::EvenDimension { dim: n });
    }
    if config.alpha_mod() < DEGENERATE_OVERLAP {
        return Err(TomographyError::DegenerateConfiguration { alpha_mod: config.alpha_mod() });
    }
    let spectrum = spectrum(config)?;
    let weights = spectrum.lambdas();
    let unit: Vec<Complex64> = (0..n)
        .map(|t| Complex64::from_polar(1.0, TAU * t as f64 / n as f64))
        .collect();
    let mut rho = DMatrix::from_element(n, n, Complex64::ZERO);
    for k in 0..=(n - 1) / 2 {
        let gamma: Vec<Complex64> = (0..n)
            .map(|r| {
                (0..n)
                    .map(|m| {
                        let w = (weights[(m + k) % n] * weights[m]).sqrt();
                        unit[(n - m * r % n) % n] * w
                    })
                    .sum()
            })
            .collect();
        let largest = gamma.iter().map(|g| g.norm()).fold(0.0, f64::max);
        if let Some(index) = gamma
            .iter()
            .position(|g| g.norm() <= SINGULARITY_CUTOFF * largest)
        {
            return Err(TomographyError::SingularSystem { diagonal: k, index });
        }
        let reciprocal: Vec<Complex64> = gamma.iter().map(|g| g.conj() / g.norm_sqr()).collect();
        for q in 0..n {
            let mut acc = Complex64::ZERO;
            for r in 0..n {
                for l in 0..n {
                    let row_phase = unit[(l + n - q) % n * r % n];
                    for j in 0..n {
                        let col_phase = unit[k * j % n];
                        acc += reciprocal[r] * row_phase * col_phase * table.value(l, j);
                    }
                }
            }
            let value = acc / n as f64;
            rho[((q + k) % n, q)] = value;
            if k > 0 {
                rho[(q, (q + k) % n)] = value.conj();
            }
        }
    }
    Ok(rho)
}

/// Record of the even-dimension obstruction: two states differing only in
/// the imaginary part of one antidiagonal pair, with identical outcome
/// tables.
#[derive(Clone, Debug)]
pub struct EvenDimDefect {
    /// Index pair `(n/2, 0)` whose imaginary part is invisible.
    pub hidden_pair: (usize, usize),
    pub epsilon: f64,
    pub rho_plus: DensityMatrix,
    pub rho_minus: DensityMatrix,
    pub table_plus: ProbabilityTable,
    pub table_minus: ProbabilityTable,
    /// Largest entrywise difference between the two tables.
    pub max_difference: f64,
}

/// Builds the even-dimension counterexample:
/// `rho_± = 1/n ± i eps (|n/2><0| - |0><n/2|)` share every outcome
/// probability.
pub fn even_dim_defect(
    config: &EquidistantConfig,
    epsilon: f64,
) -> Result<EvenDimDefect, TomographyError> {
    let n = config.dim();
    if !n.is_multiple_of(2) {
        return Err(TomographyError::OddDimension { dim: n });
    }
    let max = 1.0 / n as f64;
    if !(epsilon > 0.0 && epsilon <= max) {
        return Err(TomographyError::InvalidEpsilon { epsilon, max });
    }
    let (p, q) = (n / 2, 0);
    let build = |sign: f64| -> Result<DensityMatrix, TomographyError> {
        let mut mat =
            DMatrix::from_diagonal_element(n, n, Complex64::new(1.0 / n as f64, 0.0));
        mat[(p, q)] = Complex64::new(0.0, sign * epsilon);
        mat[(q, p)] = Complex64::new(0.0, -sign * epsilon);
        Ok(DensityMatrix::new(mat)?)
    };
    let rho_plus = build(1.0)?;
    let rho_minus = build(-1.0)?;
    let set = build_state_set(config)?;
    let table_plus = born_probabilities(&rho_plus, &set)?;
    let table_minus = born_probabilities(&rho_minus, &set)?;
    let mut max_difference = 0.0f64;
    for s in 0..n {
        for j in 0..n {
            max_difference =
                max_difference.max((table_plus.value(s, j) - table_minus.value(s, j)).abs());
        }
    }
    Ok(EvenDimDefect {
        hidden_pair: (p, q),
        epsilon,
        rho_plus,
        rho_minus,
        table_plus,
        table_minus,
        max_difference,
    })
}
