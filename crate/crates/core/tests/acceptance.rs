//! End-to-end acceptance checks, one test per criterion, each printing a
//! single PASS/FAIL line (visible with `--nocapture`).

use eqtomo_core::density::{random_density, trace_distance, DensityMatrix};
use eqtomo_core::equidistant::{
    build_state_set, max_inner_product_modulus, povm_completeness_defect, sic_check, spectrum,
    EquidistantConfig,
};
use eqtomo_core::measurement::{
    born_probabilities, estimate_probabilities, sample_counts, ProbabilityTable, TableSource,
};
use eqtomo_core::tomography::{
    closed_form_reconstruct, diagonal_system, even_dim_defect, fourier_transform_probabilities,
    reconstruct, TomographyError,
};
use eqtomo_core::{Complex64, DMatrix};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn criterion(number: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {number:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number:02} {name} failed: {detail}");
}

fn sic_config() -> EquidistantConfig {
    EquidistantConfig::new(3, 0.5, PI).unwrap()
}

/// Random valid configuration with enough margin from the admissibility
/// boundary and from the degenerate small-overlap corner to keep every
/// diagonal system decently conditioned.
fn random_interior_config(rng: &mut ChaCha8Rng, dim: usize) -> EquidistantConfig {
    loop {
        let theta = rng.random::<f64>() * TAU;
        let bound = max_inner_product_modulus(theta, dim);
        let alpha = (0.2 + 0.75 * rng.random::<f64>()) * bound;
        let Ok(config) = EquidistantConfig::new(dim, alpha, theta) else {
            continue;
        };
        let well_conditioned = (0..=(dim - 1) / 2).all(|k| {
            diagonal_system(&config, k)
                .map(|system| system.condition_number() < 1e6)
                .unwrap_or(false)
        });
        if well_conditioned {
            return config;
        }
    }
}

fn exact_table(rho: &DensityMatrix, config: &EquidistantConfig) -> ProbabilityTable {
    born_probabilities(rho, &build_state_set(config).unwrap()).unwrap()
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[test]
fn criterion_01_measurement_completeness() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for dim in [3, 5, 7, 9, 11] {
        for _ in 0..10 {
            let theta = rng.random::<f64>() * TAU;
            let bound = max_inner_product_modulus(theta, dim);
            let alpha = rng.random::<f64>() * bound * 0.95;
            let config = EquidistantConfig::new(dim, alpha, theta).unwrap();
            let set = build_state_set(&config).unwrap();
            worst = worst.max(povm_completeness_defect(&set));
        }
    }
    criterion(
        1,
        "projectors resolve n times the identity",
        worst <= 1e-10,
        &format!("worst defect {worst:.3e} over 5 dims x 10 configs"),
    );
}

#[test]
fn criterion_02_golden_dim3_family() {
    let set = build_state_set(&sic_config()).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let w = Complex64::from_polar(1.0, TAU / 3.0);
    let wc = w.conj();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::ZERO;
    // the nine reference states for dim 3 at the theta = pi bound
    let reference: [[Complex64; 3]; 9] = [
        [one, one, zero],
        [wc, w, zero],
        [w, wc, zero],
        [zero, one, one],
        [zero, wc, w],
        [zero, w, wc],
        [one, zero, one],
        [w, zero, wc],
        [wc, zero, w],
    ];
    let reference: Vec<Vec<Complex64>> = reference
        .iter()
        .map(|v| v.iter().map(|&c| c * r).collect())
        .collect();

    // bijective matching up to a global phase: unit vectors lie on the same
    // ray exactly when |<u|v>| = 1
    let generated: Vec<&[Complex64]> = set.iter().map(|(_, _, v)| v).collect();
    let mut taken = [false; 9];
    let mut worst_ray = f64::INFINITY;
    let mut worst_entry = 0.0f64;
    for target in &reference {
        let mut best: Option<(usize, f64)> = None;
        for (index, candidate) in generated.iter().enumerate() {
            if taken[index] {
                continue;
            }
            let overlap: Complex64 = candidate
                .iter()
                .zip(target)
                .map(|(a, b)| a.conj() * b)
                .sum();
            let score = overlap.norm();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((index, score));
            }
        }
        let (index, score) = best.unwrap();
        taken[index] = true;
        worst_ray = worst_ray.min(score);
        let candidate = generated[index];
        let overlap: Complex64 = candidate
            .iter()
            .zip(target)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = overlap / overlap.norm();
        for (a, b) in candidate.iter().zip(target) {
            worst_entry = worst_entry.max((a * phase - b).norm());
        }
    }
    let bijective = taken.iter().all(|&t| t);

    let sic = sic_check(&set, 1e-10);
    let target = 0.25;
    let mut worst_overlap = 0.0f64;
    for i in 0..9 {
        for k in 0..i {
            let overlap: Complex64 = generated[i]
                .iter()
                .zip(generated[k])
                .map(|(a, b)| a.conj() * b)
                .sum();
            worst_overlap = worst_overlap.max((overlap.norm_sqr() - target).abs());
        }
    }

    let pass = bijective && worst_ray > 1.0 - 1e-10 && worst_entry <= 1e-10 && sic
        && worst_overlap <= 1e-10;
    criterion(
        2,
        "dim-3 bound family matches the reference list and is symmetric",
        pass,
        &format!(
            "entry diff {worst_entry:.3e}, overlap^2 diff {worst_overlap:.3e}, sic={sic}"
        ),
    );
}

#[test]
fn criterion_03_dim3_closed_form_entries() {
    let config = sic_config();
    let weights = spectrum(&config).unwrap().lambdas().to_vec();
    let (l0, l2) = (weights[0], weights[2]);
    let den = l0.powi(3) + l2.powi(3);
    let off = (l2 * l0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let rho = random_density(3, 1 + trial % 3, rng.random::<u64>()).unwrap();
        let table = exact_table(&rho, &config);
        let ft = fourier_transform_probabilities(&table);
        let recovered = reconstruct(&table, &config).unwrap().rho_raw;

        let expected = [
            // diagonal entries from the k = 0 slice
            (0, 0, (ft.value(0, 0) * l0 * l0 + ft.value(1, 0) * l2 * l2
                - ft.value(2, 0) * l0 * l2) / den),
            (1, 1, (ft.value(1, 0) * l0 * l0 + ft.value(2, 0) * l2 * l2
                - ft.value(0, 0) * l0 * l2) / den),
            (2, 2, (ft.value(2, 0) * l0 * l0 + ft.value(0, 0) * l2 * l2
                - ft.value(1, 0) * l0 * l2) / den),
            // first-diagonal entries from the k = 1 slice
            (1, 0, ft.value(1, 1) / off),
            (2, 1, ft.value(2, 1) / off),
            (0, 2, ft.value(0, 1) / off),
        ];
        for (p, q, value) in expected {
            worst = worst.max((recovered[(p, q)] - value).norm());
            // and the formulas hit the true state, not just the solver
            worst = worst.max((rho.entry(p, q) - value).norm());
        }
    }
    criterion(
        3,
        "dim-3 entries obey the closed-form slice formulas",
        worst <= 1e-9,
        &format!("worst deviation {worst:.3e} over 100 states"),
    );
}

#[test]
fn criterion_04_exact_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for dim in [3, 5, 7, 9, 11] {
        for trial in 0..50 {
            let config = random_interior_config(&mut rng, dim);
            let rank = 1 + trial % dim;
            let rho = random_density(dim, rank, rng.random::<u64>()).unwrap();
            let report = reconstruct(&exact_table(&rho, &config), &config).unwrap();
            worst = worst.max(max_abs_diff(&report.rho_raw, rho.matrix()));
        }
    }
    criterion(
        4,
        "exact tables invert back to the state",
        worst <= 1e-8,
        &format!("worst entry error {worst:.3e} over 5 dims x 50 cases"),
    );
}

#[test]
fn criterion_05_three_reconstruction_routes_agree() {
    // independent oracle: least-squares solve of the full n^2 x n^2 Born
    // system, coefficients straight from the state vectors
    fn dense_oracle(table: &ProbabilityTable, config: &EquidistantConfig) -> DMatrix<Complex64> {
        let n = config.dim();
        let set = build_state_set(config).unwrap();
        let mut b = DMatrix::from_element(n * n, n * n, Complex64::ZERO);
        let mut rhs = DVector::from_element(n * n, Complex64::ZERO);
        for (s, j, v) in set.iter() {
            let row = s * n + j;
            for p in 0..n {
                for q in 0..n {
                    b[(row, p * n + q)] = v[p].conj() * v[q];
                }
            }
            rhs[row] = Complex64::new(table.value(s, j), 0.0);
        }
        let solution = b.svd(true, true).solve(&rhs, 1e-12).unwrap();
        DMatrix::from_fn(n, n, |p, q| solution[p * n + q])
    }

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut configs = vec![sic_config()];
    for dim in [3, 5, 7] {
        for _ in 0..4 {
            configs.push(random_interior_config(&mut rng, dim));
        }
    }
    let mut worst = 0.0f64;
    for config in &configs {
        let dim = config.dim();
        let rho = random_density(dim, dim, rng.random::<u64>()).unwrap();
        let table = exact_table(&rho, config);
        let solved = reconstruct(&table, config).unwrap().rho_raw;
        let direct = closed_form_reconstruct(&table, config).unwrap();
        let oracle = dense_oracle(&table, config);
        worst = worst.max(max_abs_diff(&solved, &direct));
        worst = worst.max(max_abs_diff(&solved, &oracle));
        worst = worst.max(max_abs_diff(&direct, &oracle));
    }
    criterion(
        5,
        "solver, closed form and dense least squares coincide",
        worst <= 1e-8,
        &format!("worst pairwise deviation {worst:.3e} over {} configs", configs.len()),
    );
}

#[test]
fn criterion_06_even_dimensions_hide_information() {
    let mut worst_difference = 0.0f64;
    let mut refused = true;
    for dim in [4, 6] {
        let config = EquidistantConfig::new(dim, 0.3, 0.0).unwrap();
        let demo = even_dim_defect(&config, 0.1).unwrap();
        worst_difference = worst_difference.max(demo.max_difference);
        refused &= matches!(
            reconstruct(&demo.table_plus, &config),
            Err(TomographyError::EvenDimension { .. })
        );
    }
    criterion(
        6,
        "even dimensions give identical tables and are refused",
        worst_difference <= 1e-12 && refused,
        &format!("worst table difference {worst_difference:.3e}, refusal {refused}"),
    );
}

#[test]
fn criterion_07_zero_phase_stays_regular() {
    let mut all_regular = true;
    let mut smallest_ratio = f64::INFINITY;
    for dim in [3usize, 5, 7] {
        for step in 1..=9 {
            let alpha = step as f64 / 10.0;
            let config = EquidistantConfig::new(dim, alpha, 0.0).unwrap();
            for k in 0..=(dim - 1) / 2 {
                let system = diagonal_system(&config, k).unwrap();
                let moduli: Vec<f64> =
                    system.eigenvalues().iter().map(|g| g.norm()).collect();
                let largest = moduli.iter().cloned().fold(0.0, f64::max);
                let smallest = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
                smallest_ratio = smallest_ratio.min(smallest / largest);
                all_regular &= smallest > 1e-12 * largest;
            }
        }
    }

    // but a vanishing overlap is flagged as degenerate
    let tiny = EquidistantConfig::new(3, 1e-7, 0.0).unwrap();
    let table = exact_table(&DensityMatrix::maximally_mixed(3), &tiny);
    let rejected = matches!(
        reconstruct(&table, &tiny),
        Err(TomographyError::DegenerateConfiguration { .. })
    );

    criterion(
        7,
        "zero-phase systems stay invertible until the overlap vanishes",
        all_regular && rejected,
        &format!("smallest spectral ratio {smallest_ratio:.3e}, degenerate rejected {rejected}"),
    );
}

#[test]
fn criterion_08_error_shrinks_with_shots() {
    // fixed interior mixed state, away from the simplex boundary
    let seeded = random_density(3, 3, 424_242).unwrap();
    let mixed = DensityMatrix::maximally_mixed(3);
    let half = Complex64::new(0.5, 0.0);
    let rho =
        DensityMatrix::new(seeded.matrix() * half + mixed.matrix() * half).unwrap();
    let config = sic_config();
    let table = exact_table(&rho, &config);

    let distance_at = |shots: u64, seed: u64| -> f64 {
        let counts = sample_counts(&table, shots, seed).unwrap();
        let estimate = estimate_probabilities(&counts);
        let report = reconstruct(&estimate, &config).unwrap();
        trace_distance(&rho, &report.rho_physical.unwrap()).unwrap()
    };
    let median = |mut xs: Vec<f64>| -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs[xs.len() / 2]
    };
    let coarse = median((0..50).map(|seed| distance_at(10_000, seed)).collect());
    let fine = median((0..50).map(|seed| distance_at(100_000, seed)).collect());
    let factor = coarse / fine;
    criterion(
        8,
        "median error drops by about sqrt(10) for 10x shots",
        (2.5..=4.5).contains(&factor),
        &format!("median trace distance {coarse:.3e} -> {fine:.3e}, factor {factor:.2}"),
    );
}

#[test]
fn criterion_09_frequency_slices_stay_local() {
    let dim = 5usize;
    let k0 = 2usize;
    let config = EquidistantConfig::new(dim, 0.2, 2.8).unwrap();
    // interior state: every table entry sits well inside (0, 1), so the
    // perturbed rows are still a valid table
    let half = Complex64::new(0.5, 0.0);
    let rho = DensityMatrix::new(
        random_density(dim, dim, 909).unwrap().matrix() * half
            + DensityMatrix::maximally_mixed(dim).matrix() * half,
    )
    .unwrap();
    let table = exact_table(&rho, &config);

    // perturb only frequency slice k0 of each row, keeping rows real and
    // their sums (slice 0) untouched
    let mut rng = ChaCha8Rng::seed_from_u64(910);
    let mut values = table.values().to_vec();
    for row in values.iter_mut() {
        let delta = Complex64::new(
            (rng.random::<f64>() - 0.5) * 1e-3,
            (rng.random::<f64>() - 0.5) * 1e-3,
        );
        for (j, value) in row.iter_mut().enumerate() {
            let phase = Complex64::from_polar(1.0, -TAU * (k0 * j) as f64 / dim as f64);
            *value += 2.0 / dim as f64 * (delta * phase).re;
        }
    }
    let perturbed = ProbabilityTable::new(values, TableSource::Exact).unwrap();

    let base = reconstruct(&table, &config).unwrap().rho_raw;
    let shifted = reconstruct(&perturbed, &config).unwrap().rho_raw;
    let difference = &shifted - &base;

    let mut off_slice = 0.0f64;
    let mut on_slice = 0.0f64;
    for p in 0..dim {
        for q in 0..dim {
            let lag = (p + dim - q) % dim;
            let touched = lag == k0 || lag == dim - k0;
            let magnitude = difference[(p, q)].norm();
            if touched {
                on_slice = on_slice.max(magnitude);
            } else {
                off_slice = off_slice.max(magnitude);
            }
        }
    }
    criterion(
        9,
        "a single-frequency perturbation moves only its two diagonals",
        off_slice <= 1e-12 && on_slice > 1e-6,
        &format!("off-slice movement {off_slice:.3e}, on-slice {on_slice:.3e}"),
    );
}

#[test]
fn criterion_10_weight_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst_sum = 0.0f64;
    let mut worst_eig = 0.0f64;
    for dim in [3usize, 5, 7, 9, 11] {
        for _ in 0..8 {
            let theta = rng.random::<f64>() * TAU;
            let bound = max_inner_product_modulus(theta, dim);
            let config =
                EquidistantConfig::new(dim, rng.random::<f64>() * bound * 0.95, theta).unwrap();
            let weights = spectrum(&config).unwrap().lambdas().to_vec();
            let total: f64 = weights.iter().sum();
            worst_sum = worst_sum.max((total - dim as f64).abs());

            let set = build_state_set(&config).unwrap();
            let gram: DMatrix<Complex64> = DMatrix::from_fn(dim, dim, |j, jp| {
                set.state(0, j)
                    .iter()
                    .zip(set.state(0, jp))
                    .map(|(a, b)| a.conj() * b)
                    .sum()
            });
            let mut from_gram: Vec<f64> =
                gram.symmetric_eigen().eigenvalues.iter().copied().collect();
            let mut from_formula = weights;
            from_gram.sort_by(|a, b| a.partial_cmp(b).unwrap());
            from_formula.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in from_gram.iter().zip(&from_formula) {
                worst_eig = worst_eig.max((a - b).abs());
            }
        }
    }
    criterion(
        10,
        "weights sum to n and match the Gram spectrum",
        worst_sum <= 1e-10 && worst_eig <= 1e-9,
        &format!("sum defect {worst_sum:.3e}, eigenvalue defect {worst_eig:.3e}"),
    );
}
