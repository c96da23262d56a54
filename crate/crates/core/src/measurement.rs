//! Outcome probabilities and finite-shot simulation for the shifted
//! equidistant measurement.
//!
//! Tables are indexed by shift `s` (row) and state label `j` (column). The
//! `n^2` outcomes together carry total weight `n` because every shifted
//! family is separately normalized; dividing a table by `n` turns it into
//! one probability distribution over all outcomes.

use crate::density::DensityMatrix;
use crate::equidistant::{spectrum, EquidistantConfig, EquidistantError, Spectrum, StateSet};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use thiserror::Error;

/// Born values count as real while their imaginary residue stays below this.
pub const IMAGINARY_RESIDUE: f64 = 1e-10;

/// Absolute tolerance on table entry ranges and sums.
pub const TABLE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MeasurementError {
    #[error("state has dimension {rho} but the measurement acts on dimension {states}")]
    DimensionMismatch { rho: usize, states: usize },
    #[error("Born value has imaginary residue {value}; the input is not Hermitian enough")]
    ImaginaryResidue { value: f64 },
    #[error("table must be a nonempty square grid")]
    MalformedTable,
    #[error("table entry ({s}, {j}) is {value}, outside [0, {limit}]")]
    EntryOutOfRange { s: usize, j: usize, value: f64, limit: f64 },
    #[error("table entries sum to {sum}, expected the dimension {expected}")]
    WrongSum { sum: f64, expected: f64 },
    #[error("counts sum to {sum} but the table claims {shots} shots")]
    CountMismatch { sum: u64, shots: u64 },
    #[error("need at least one shot")]
    ZeroShots,
    #[error("sampling needs exact probabilities; this table is itself an estimate")]
    EstimatedSource,
    #[error(transparent)]
    Spectrum(#[from] EquidistantError),
}

/// Where a probability table came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableSource {
    /// Computed from a state by the Born rule.
    Exact,
    /// Empirical frequencies from a finite number of shots.
    Estimated { shots: u64 },
}

/// Outcome probabilities `P[s][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    values: Vec<Vec<f64>>,
    source: TableSource,
}

impl ProbabilityTable {
    /// Validates entry ranges and the total-weight identity.
    ///
    /// Exact entries live in [0, 1]. Estimated entries may legitimately
    /// reach `n` (every shot in one cell), so the cap depends on the source.
    pub fn new(values: Vec<Vec<f64>>, source: TableSource) -> Result<Self, MeasurementError> {
        let n = values.len();
        if n == 0 || values.iter().any(|row| row.len() != n) {
            return Err(MeasurementError::MalformedTable);
        }
        let limit = match source {
            TableSource::Exact => 1.0,
            TableSource::Estimated { .. } => n as f64,
        };
        let mut sum = 0.0;
        for (s, row) in values.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if !value.is_finite() || value < -TABLE_TOLERANCE || value > limit + TABLE_TOLERANCE
                {
                    return Err(MeasurementError::EntryOutOfRange { s, j, value, limit });
                }
                sum += value;
            }
        }
        if (sum - n as f64).abs() > TABLE_TOLERANCE {
            return Err(MeasurementError::WrongSum { sum, expected: n as f64 });
        }
        Ok(Self { values, source })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, s: usize, j: usize) -> f64 {
        self.values[s][j]
    }
}

/// Outcome counts from repeated sampling, same `(s, j)` layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    counts: Vec<Vec<u64>>,
    shots: u64,
}

impl CountTable {
    pub fn new(counts: Vec<Vec<u64>>, shots: u64) -> Result<Self, MeasurementError> {
        let n = counts.len();
        if n == 0 || counts.iter().any(|row| row.len() != n) {
            return Err(MeasurementError::MalformedTable);
        }
        if shots == 0 {
            return Err(MeasurementError::ZeroShots);
        }
        let sum: u64 = counts.iter().flatten().sum();
        if sum != shots {
            return Err(MeasurementError::CountMismatch { sum, shots });
        }
        Ok(Self { counts, shots })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn count(&self, s: usize, j: usize) -> u64 {
        self.counts[s][j]
    }
}

/// Born-rule probabilities `P[s][j] = <a_j^s| rho |a_j^s>`.
///
/// The quadratic form of a Hermitian matrix is real; imaginary residue
/// beyond the tolerance is a hard error rather than something to discard
/// silently.
pub fn born_probabilities(
    rho: &DensityMatrix,
    set: &StateSet,
) -> Result<ProbabilityTable, MeasurementError> {
    let n = set.dim();
    if rho.dim() != n {
        return Err(MeasurementError::DimensionMismatch { rho: rho.dim(), states: n });
    }
    let mut values = vec![vec![0.0; n]; n];
    for (s, j, v) in set.iter() {
        let mut acc = Complex64::ZERO;
        for p in 0..n {
            for q in 0..n {
                acc += v[p].conj() * rho.entry(p, q) * v[q];
            }
        }
        if acc.im.abs() > IMAGINARY_RESIDUE {
            return Err(MeasurementError::ImaginaryResidue { value: acc.im });
        }
        values[s][j] = acc.re;
    }
    ProbabilityTable::new(values, TableSource::Exact)
}

/// The same probabilities through the Gram-weight expansion instead of the
/// state vectors:
/// `P[s][j] = (1/n) sum_{p,q} e^{2 pi i (p-q) j / n} sqrt(λ_{p-s} λ_{q-s}) rho_{q,p}`.
///
/// Deliberately a second route to `born_probabilities`; the two must agree
/// and the tests hold them to that.
pub fn born_probabilities_via_expansion(
    rho: &DensityMatrix,
    config: &EquidistantConfig,
) -> Result<ProbabilityTable, MeasurementError> {
    let n = config.dim();
    if rho.dim() != n {
        return Err(MeasurementError::DimensionMismatch { rho: rho.dim(), states: n });
    }
    let spectrum = spectrum(config)?;
    let complex_values = expansion_values(rho.matrix(), &spectrum);
    let mut values = vec![vec![0.0; n]; n];
    for s in 0..n {
        for j in 0..n {
            let v = complex_values[s][j];
            if v.im.abs() > IMAGINARY_RESIDUE {
                return Err(MeasurementError::ImaginaryResidue { value: v.im });
            }
            values[s][j] = v.re;
        }
    }
    ProbabilityTable::new(values, TableSource::Exact)
}

/// Expansion values of an arbitrary matrix, imaginary parts kept.
///
/// Also serves reconstruction residuals, where the input is a raw inversion
/// output rather than a physical state.
pub(crate) fn expansion_values(mat: &DMatrix<Complex64>, spectrum: &Spectrum) -> Vec<Vec<Complex64>> {
    let n = spectrum.dim();
    let root: Vec<f64> = spectrum.lambdas().iter().map(|l| l.sqrt()).collect();
    let unit: Vec<Complex64> = (0..n)
        .map(|t| Complex64::from_polar(1.0, TAU * t as f64 / n as f64))
        .collect();
    let mut out = vec![vec![Complex64::ZERO; n]; n];
    for s in 0..n {
        for j in 0..n {
            let mut acc = Complex64::ZERO;
            for p in 0..n {
                for q in 0..n {
                    let phase = unit[(p + n - q) % n * j % n];
                    let weight = root[(p + n - s) % n] * root[(q + n - s) % n];
                    acc += phase * weight * mat[(q, p)];
                }
            }
            out[s][j] = acc / n as f64;
        }
    }
    out
}

/// Draws `shots` outcomes from the flattened table by inverse transform
/// sampling and tallies them. Deterministic in `seed`.
///
/// The outcome weights are the table entries over `n`.
pub fn sample_counts(
    table: &ProbabilityTable,
    shots: u64,
    seed: u64,
) -> Result<CountTable, MeasurementError> {
    if table.source() != TableSource::Exact {
        return Err(MeasurementError::EstimatedSource);
    }
    if shots == 0 {
        return Err(MeasurementError::ZeroShots);
    }
    let n = table.dim();
    let mut cumulative = Vec::with_capacity(n * n);
    let mut total = 0.0;
    for row in table.values() {
        for &v in row {
            total += (v / n as f64).max(0.0);
            cumulative.push(total);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; n]; n];
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let index = cumulative.partition_point(|&c| c <= u).min(n * n - 1);
        counts[index / n][index % n] += 1;
    }
    CountTable::new(counts, shots)
}

/// Empirical probabilities `n * counts / shots`; sums back to `n` by
/// construction.
pub fn estimate_probabilities(counts: &CountTable) -> ProbabilityTable {
    let n = counts.dim();
    let scale = n as f64 / counts.shots() as f64;
    let values = counts
        .counts()
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 * scale).collect())
        .collect();
    ProbabilityTable::new(values, TableSource::Estimated { shots: counts.shots() })
        .expect("frequencies always form a valid table")
}
