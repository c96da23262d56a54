//! Equidistant state families and the shifted measurement set they induce.
//!
//! A configuration is a dimension `n`, an overlap modulus and an overlap
//! phase. The base family `{|a_0>, ..., |a_{n-1}>}` has
//! `<a_j|a_j'> = a e^{i theta}` for every `j > j'`; it exists exactly when
//! the Gram weights λ_k are all nonnegative. Shifting every basis label by
//! `s = 0..n-1` yields `n` such families whose `n^2` rank-one projectors sum
//! to `n` times the identity; for odd `n` the resulting outcome statistics
//! determine the state.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Default absolute tolerance for structural checks on states and overlaps.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Weights in [-WEIGHT_CLIP, 0) are rounding debris from the admissibility
/// boundary and are clipped to exact zero; anything lower is a real
/// violation.
const WEIGHT_CLIP: f64 = 1e-9;

/// Below this modulus a sine factor counts as a removable zero.
const REMOVABLE_ZERO: f64 = 1e-9;

/// Errors from validating configurations or building state families.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum EquidistantError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("overlap modulus must be finite and nonnegative, got {0}")]
    InvalidOverlapModulus(f64),
    #[error("overlap phase must lie in [0, 2*pi), got {0}")]
    PhaseOutOfRange(f64),
    #[error("overlap modulus {alpha_mod} exceeds the bound {bound} for dimension {dim}")]
    AlphaBeyondBound { alpha_mod: f64, bound: f64, dim: usize },
    #[error("Gram weight {index} is negative ({value}): no equidistant family with these parameters")]
    SpectrumNegative { index: usize, value: f64 },
    #[error("state table rejected: {0}")]
    InvalidStateTable(String),
}

/// Parameters of one equidistant family.
///
/// Construction validates everything once, so a value of this type always
/// describes a family that exists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquidistantConfig {
    dim: usize,
    alpha_mod: f64,
    theta: f64,
}

impl EquidistantConfig {
    /// Validates and stores a configuration.
    ///
    /// The modulus may reach the admissibility bound exactly (within the
    /// default tolerance); right at the bound one Gram weight vanishes and
    /// the family becomes linearly dependent but is still well defined.
    pub fn new(dim: usize, alpha_mod: f64, theta: f64) -> Result<Self, EquidistantError> {
        if dim < 2 {
            return Err(EquidistantError::DimensionTooSmall(dim));
        }
        if !alpha_mod.is_finite() || alpha_mod < 0.0 {
            return Err(EquidistantError::InvalidOverlapModulus(alpha_mod));
        }
        if !theta.is_finite() || !(0.0..TAU).contains(&theta) {
            return Err(EquidistantError::PhaseOutOfRange(theta));
        }
        let bound = max_inner_product_modulus(theta, dim);
        if alpha_mod > bound + DEFAULT_TOLERANCE {
            return Err(EquidistantError::AlphaBeyondBound { alpha_mod, bound, dim });
        }
        let config = Self { dim, alpha_mod, theta };
        spectrum(&config)?;
        Ok(config)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha_mod(&self) -> f64 {
        self.alpha_mod
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// The common overlap `<a_j|a_j'>` for `j > j'`.
    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.alpha_mod, self.theta)
    }
}

/// Largest admissible overlap modulus for `dim` states with phase `theta`.
///
/// sin((pi - theta)/n) / sin(theta + (pi - theta)/n), with a removable
/// singularity at theta = pi where the ratio tends to 1/(n-1). At theta = 0
/// the bound is 1.
pub fn max_inner_product_modulus(theta: f64, dim: usize) -> f64 {
    assert!(dim >= 2, "need at least two states");
    let n = dim as f64;
    let numerator = ((PI - theta) / n).sin();
    let denominator = (theta + (PI - theta) / n).sin();
    if denominator.abs() < REMOVABLE_ZERO {
        // numerator and denominator vanish together; the ratio of their
        // theta-derivatives survives
        1.0 / (n - 1.0)
    } else {
        numerator / denominator
    }
}

/// Gram weights λ_k and unit phases ω_k of one configuration.
#[derive(Clone, Debug)]
pub struct Spectrum {
    lambdas: Vec<f64>,
    phases: Vec<Complex64>,
}

impl Spectrum {
    /// Weights λ_k; nonnegative and summing to the dimension.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Unit phases ω_k = e^{2 i (theta - k pi) / n}.
    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }
}

/// Computes the Gram weights and phases of a configuration.
///
/// λ_k = 1 - a sin(theta + (k pi - theta)/n) / sin((k pi - theta)/n); where
/// the denominator vanishes the sine ratio is replaced by its limit
/// -(n-1) cos(theta). The weights are the eigenvalues of the family's Gram
/// matrix, so a negative one means no such family exists.
pub fn spectrum(config: &EquidistantConfig) -> Result<Spectrum, EquidistantError> {
    let n = config.dim();
    let nf = n as f64;
    let a = config.alpha_mod();
    let theta = config.theta();
    let mut lambdas = Vec::with_capacity(n);
    for k in 0..n {
        let arg = (k as f64 * PI - theta) / nf;
        let ratio = if arg.sin().abs() < REMOVABLE_ZERO {
            -(nf - 1.0) * theta.cos()
        } else {
            (theta + arg).sin() / arg.sin()
        };
        let weight = 1.0 - a * ratio;
        if weight < -WEIGHT_CLIP {
            return Err(EquidistantError::SpectrumNegative { index: k, value: weight });
        }
        lambdas.push(weight.max(0.0));
    }
    let phases = (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * (theta - k as f64 * PI) / nf))
        .collect();
    Ok(Spectrum { lambdas, phases })
}

/// The `n^2` measurement states, indexed by shift `s` and label `j`.
#[derive(Clone, Debug)]
pub struct StateSet {
    config: EquidistantConfig,
    states: Vec<Vec<Vec<Complex64>>>,
}

impl StateSet {
    pub fn config(&self) -> &EquidistantConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    /// Component vector of state `(s, j)` in the canonical basis.
    pub fn state(&self, s: usize, j: usize) -> &[Complex64] {
        &self.states[s][j]
    }

    /// All states with their `(s, j)` labels.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &[Complex64])> {
        self.states.iter().enumerate().flat_map(|(s, family)| {
            family
                .iter()
                .enumerate()
                .map(move |(j, v)| (s, j, v.as_slice()))
        })
    }

    /// Rebuilds a set from raw parts, re-checking every structural invariant:
    /// shape, unit norms, common overlaps within each shift, and the
    /// resolution of the identity.
    ///
    /// Meant for reloading serialized sets; `build_state_set` is the normal
    /// constructor.
    pub fn from_parts(
        config: EquidistantConfig,
        states: Vec<Vec<Vec<Complex64>>>,
    ) -> Result<Self, EquidistantError> {
        let n = config.dim();
        let shape_ok = states.len() == n
            && states
                .iter()
                .all(|family| family.len() == n && family.iter().all(|v| v.len() == n));
        if !shape_ok {
            return Err(EquidistantError::InvalidStateTable(format!(
                "expected {n} x {n} table of {n}-component vectors"
            )));
        }
        let set = Self { config, states };
        for (s, j, v) in set.iter() {
            let norm_sqr: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if (norm_sqr - 1.0).abs() > DEFAULT_TOLERANCE {
                return Err(EquidistantError::InvalidStateTable(format!(
                    "state ({s}, {j}) has squared norm {norm_sqr}"
                )));
            }
        }
        let alpha = config.alpha();
        for s in 0..n {
            for j in 0..n {
                for jp in 0..j {
                    let overlap = inner(set.state(s, j), set.state(s, jp));
                    if (overlap - alpha).norm() > DEFAULT_TOLERANCE {
                        return Err(EquidistantError::InvalidStateTable(format!(
                            "overlap of states ({s}, {j}) and ({s}, {jp}) is {overlap}, expected {alpha}"
                        )));
                    }
                }
            }
        }
        let defect = povm_completeness_defect(&set);
        if defect > DEFAULT_TOLERANCE {
            return Err(EquidistantError::InvalidStateTable(format!(
                "projectors miss the resolution of the identity by {defect}"
            )));
        }
        Ok(set)
    }
}

pub(crate) fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Builds the full shifted family of a configuration.
///
/// State `(s, j)` carries coefficient `sqrt(λ_k / n) (ω_k^*)^j` on basis
/// vector `|(k + s) mod n>`. Within each shift the overlaps reproduce the
/// configured α for `j > j'`, and the `n^2` states resolve `n` times the
/// identity.
pub fn build_state_set(config: &EquidistantConfig) -> Result<StateSet, EquidistantError> {
    let spectrum = spectrum(config)?;
    let n = config.dim();
    let scale = 1.0 / (n as f64).sqrt();
    let amplitudes: Vec<f64> = spectrum.lambdas().iter().map(|l| l.sqrt() * scale).collect();
    // angle of ω_k; conjugation enters through the minus sign below
    let angles: Vec<f64> = (0..n)
        .map(|k| 2.0 * (config.theta() - k as f64 * PI) / n as f64)
        .collect();
    let mut states = vec![vec![vec![Complex64::ZERO; n]; n]; n];
    for (s, block) in states.iter_mut().enumerate() {
        for (j, state) in block.iter_mut().enumerate() {
            for k in 0..n {
                state[(k + s) % n] =
                    Complex64::from_polar(amplitudes[k], -(j as f64) * angles[k]);
            }
        }
    }
    Ok(StateSet { config: *config, states })
}

/// Max-absolute entry of `sum_{s,j} |a_j^s><a_j^s| - n 1`.
pub fn povm_completeness_defect(set: &StateSet) -> f64 {
    let n = set.dim();
    let mut sum = vec![vec![Complex64::ZERO; n]; n];
    for (_, _, v) in set.iter() {
        for p in 0..n {
            for q in 0..n {
                sum[p][q] += v[p] * v[q].conj();
            }
        }
    }
    let mut defect = 0.0f64;
    for (p, row) in sum.iter().enumerate() {
        for (q, value) in row.iter().enumerate() {
            let expected = if p == q {
                Complex64::new(n as f64, 0.0)
            } else {
                Complex64::ZERO
            };
            defect = defect.max((value - expected).norm());
        }
    }
    defect
}

/// Whether every pair of distinct states in the set has squared overlap
/// 1/(n+1), the defining symmetry of a maximal rank-one informationally
/// complete measurement.
pub fn sic_check(set: &StateSet, tolerance: f64) -> bool {
    let n = set.dim();
    let target = 1.0 / (n as f64 + 1.0);
    let flat: Vec<&[Complex64]> = set.iter().map(|(_, _, v)| v).collect();
    for i in 0..flat.len() {
        for k in 0..i {
            if (inner(flat[i], flat[k]).norm_sqr() - target).abs() > tolerance {
                return false;
            }
        }
    }
    true
}
