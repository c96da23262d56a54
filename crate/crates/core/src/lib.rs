//! State reconstruction from measurements built out of equidistant pure
//! states.
//!
//! For a Hilbert-space dimension `n`, an overlap modulus and an overlap
//! phase pick out a family of `n` unit vectors whose pairwise inner products
//! all coincide. Cyclic shifts of the family give `n^2` rank-one projectors
//! that resolve `n` times the identity, and for odd `n` the outcome
//! statistics fix the density matrix: Fourier transforming the outcome table
//! splits the inversion into one small circulant solve per matrix diagonal.
//!
//! The crate is organized bottom-up: [`circulant`] holds the transform and
//! solver, [`equidistant`] builds state families, [`density`] validates and
//! compares density matrices, [`measurement`] produces exact and sampled
//! outcome tables, [`tomography`] inverts them, and [`io`] moves everything
//! through versioned JSON documents.
//!
//! ```
//! use eqtomo_core::{density, equidistant, measurement, tomography};
//!
//! let config = equidistant::EquidistantConfig::new(3, 0.5, std::f64::consts::PI)?;
//! let states = equidistant::build_state_set(&config)?;
//! let rho = density::random_density(3, 2, 7)?;
//! let table = measurement::born_probabilities(&rho, &states)?;
//! let report = tomography::reconstruct(&table, &config)?;
//! let recovered = report.rho_physical.as_ref().unwrap();
//! assert!(density::fidelity(&rho, recovered)? > 1.0 - 1e-8);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod circulant;
pub mod density;
pub mod equidistant;
pub mod io;
pub mod measurement;
pub mod tomography;

pub use nalgebra::DMatrix;
pub use num_complex::Complex64;
