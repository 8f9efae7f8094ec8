mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::*;
use heisflow_core::hardy::{cubic_projection, ground_state_profile, sobolev2, FrequencyGrid};
use heisflow_core::heis::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coarse() -> Arc<RadialSpectralGrid> {
    RadialGridSpec::coarse().build().unwrap()
}

fn small() -> Arc<RadialSpectralGrid> {
    RadialGridSpec { k_max: 3, sigma_step: 1.0 / 8.0, m_lo: 1, m_hi: 32, n_s: 256, points_per_panel: 16 }
        .build()
        .unwrap()
}

/// Random field with smooth decay in frequency and mode.
fn random_field(grid: &Arc<RadialSpectralGrid>, seed: u64, positive_only: bool) -> RadialField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = RadialField::zeros(grid.clone());
    for k in 0..grid.n_modes() {
        for sign in Sign::BOTH {
            if positive_only && sign == Sign::Minus {
                continue;
            }
            for j in 0..grid.n_freq() {
                let s = grid.sigma(Sign::Plus, j);
                let env = (-s).exp() * s.sqrt() / (1.0 + k as f64);
                u.set(k, sign, j, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * env);
            }
        }
    }
    u
}

#[test]
fn mode_orthogonality() {
    for grid in [coarse(), RadialGridSpec::default().build().unwrap()] {
        let w = grid.radial_weights();
        let mut worst: f64 = 0.0;
        for j in 0..grid.n_freq() {
            let sigma = grid.sigma(Sign::Plus, j);
            let norm = PI / (2.0 * sigma);
            for k in 0..grid.n_modes() {
                for kk in 0..=k {
                    let a = grid.basis_row(j, k);
                    let b = grid.basis_row(j, kk);
                    let ip: f64 = a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum();
                    let want = if k == kk { norm } else { 0.0 };
                    worst = worst.max((ip - want).abs() / norm);
                }
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }
}

#[test]
fn radial_gaussian_integral() {
    let grid = RadialGridSpec::default().build().unwrap();
    for j in 0..grid.n_freq() {
        let s = grid.sigma(Sign::Plus, j);
        let got: f64 =
            grid.radial_nodes().iter().zip(grid.radial_weights()).map(|(v, w)| w * (-2.0 * s * v).exp()).sum();
        assert!((got / (PI / (2.0 * s)) - 1.0).abs() < 1e-10);
    }
}

/// Laguerre mode `k` (Hermite level `2k`).
fn mode_value(k: usize, sigma: f64, r: f64) -> f64 {
    let mut l = vec![0.0; k + 1];
    laguerre_all(k, 2.0 * sigma * r * r, &mut l);
    l[k] * (-sigma * r * r).exp()
}

#[test]
fn eigenrelation_by_finite_differences() {
    for &(k, sigma) in &[(0usize, 1.0), (2, 0.7), (5, 1.3)] {
        let mut errs = Vec::new();
        for h in [0.02, 0.01, 0.005] {
            let mut worst: f64 = 0.0;
            for i in 1..200 {
                let r = 0.3 + i as f64 * 0.01;
                let f = |r: f64| mode_value(k, sigma, r);
                let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
                let d1 = (f(r + h) - f(r - h)) / (2.0 * h);
                let lhs = 0.25 * (d2 + d1 / r) - r * r * sigma * sigma * f(r);
                let rhs = -((2 * k + 1) as f64) * sigma * f(r);
                worst = worst.max((lhs - rhs).abs());
            }
            errs.push(worst);
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "k={k}: {errs:?}");
        assert!(errs[2] < 1e-3);
    }
}

#[test]
fn parseval_spectral_vs_collocation() {
    for grid in [small(), coarse()] {
        for seed in 0..3 {
            let u = random_field(&grid, seed, false);
            let spectral = u.norm_sq(0).unwrap();
            let colloc = l2norm2_collocation(&u);
            assert!((colloc / spectral - 1.0).abs() < 1e-6, "{colloc} {spectral}");
        }
    }
}

#[test]
fn analysis_inverts_synthesis() {
    let grid = coarse();
    let u = random_field(&grid, 5, false);
    let back = from_physical(&grid, to_physical(&u));
    let err = back.sub(&u).norm_sq(0).unwrap() / u.norm_sq(0).unwrap();
    assert!(err.sqrt() < 1e-6, "{err}");
}

#[test]
fn symbol_examples() {
    assert_eq!(linear_symbol(0, 1.7, 0.3).unwrap(), 1.7);
    assert!((linear_symbol(0, 0.4, 0.99).unwrap() - 0.4).abs() < 1e-12);
    assert!((linear_symbol(1, 1.0, 0.5).unwrap() - 3.0).abs() < 1e-15);
    assert!((linear_symbol(0, -1.0, 0.5).unwrap() - 3.0).abs() < 1e-15);
    assert!(linear_symbol(0, 1.0, 1.0).is_err());
    assert!(linear_symbol(0, 1.0, -0.1).is_err());
    let lam = linear_symbol_tensor(&coarse(), 0.999).unwrap();
    assert!(lam.iter().all(|&l| l > 0.0));
}

#[test]
fn truncation_properties() {
    let grid = coarse();
    let u = random_field(&grid, 1, false);
    let v = random_field(&grid, 2, false);
    for n in [1, 2, 3, 8] {
        let tu = truncate(&u, n).unwrap();
        assert_eq!(truncate(&tu, n).unwrap(), tu);
        let tv = truncate(&v, n).unwrap();
        let a = tu.inner_order(&v, 1);
        let b = u.inner_order(&tv, 1);
        assert!((a - b).norm() <= 1e-14 * (1.0 + a.norm()));
        for order in -1..=2 {
            assert!(tu.norm_sq(order).unwrap() <= u.norm_sq(order).unwrap());
        }
    }
    let mut last = 0.0;
    for n in 1..=40 {
        let h = truncate(&u, n).unwrap().norm_sq(1).unwrap();
        assert!(h >= last);
        last = h;
    }
    assert!((last - u.norm_sq(1).unwrap()).abs() < 1e-14 * last);
    assert!(truncate(&u, 0).is_err());
}

#[test]
fn second_order_norm_bounds_for_truncated_fields() {
    let grid = coarse();
    for n in [2usize, 3, 4] {
        for seed in 0..4 {
            let v = truncate(&random_field(&grid, seed, true), n).unwrap();
            let p = momentum(&v);
            let h2 = v.norm_sq(0).unwrap() + v.norm_sq(2).unwrap();
            let nf = n as f64;
            assert!(p <= h2 && h2 <= nf * (nf * nf + 2.0 * nf + 2.0) * p, "n={n}");
        }
    }
}

#[test]
fn split_examples() {
    let grid = coarse();
    let q = embed_hardy(&ground_state_profile(&grid.hardy_grid()), &grid);
    let (p, w) = split_plus(&q);
    assert_eq!(p, q);
    assert!(w.is_zero());
    let only_one = random_field(&grid, 3, false).map(|k, _, c| if k == 2 { c } else { Complex64::new(0.0, 0.0) });
    let (p, w) = split_plus(&only_one);
    assert!(p.is_zero());
    assert_eq!(w, only_one);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn split_is_orthogonal(seed in 0u64..10_000) {
        let grid = small();
        let u = random_field(&grid, seed, false);
        let (p, w) = split_plus(&u);
        prop_assert_eq!(p.add(&w), u.clone());
        for order in -1..=2 {
            let total = u.norm_sq(order).unwrap();
            let parts = p.norm_sq(order).unwrap() + w.norm_sq(order).unwrap();
            prop_assert!((total - parts).abs() <= 1e-12 * total);
        }
    }

    #[test]
    fn truncation_never_increases_norm(seed in 0u64..10_000, n in 1usize..12) {
        let grid = small();
        let u = random_field(&grid, seed, false);
        let t = truncate(&u, n).unwrap();
        prop_assert!(t.norm_sq(1).unwrap() <= u.norm_sq(1).unwrap());
        prop_assert_eq!(truncate(&t, n).unwrap(), t);
    }
}

#[test]
fn embedding_round_trip_and_momentum() {
    let grid = RadialGridSpec::default().build().unwrap();
    let lattice = grid.hardy_grid();
    let f = ground_state_profile(&lattice);
    let u = embed_hardy(&f, &grid);
    assert_eq!(extract_hardy(&u), f);
    assert_eq!(embed_hardy(&extract_hardy(&u), &grid), u);

    let standard = ground_state_profile(&FrequencyGrid::standard());
    let v = embed_hardy(&standard, &grid);
    let p = momentum(&v);
    assert!((p / (PI * PI) - 1.0).abs() < 0.02, "momentum {}", p / (PI * PI));
    // rectangle sums on the lattice versus trapezoid sums on the same nodes
    assert!((u.norm_sq(1).unwrap() / (PI * sobolev2(&f, 1).unwrap()) - 1.0).abs() < 1e-2);

    let zero = heisflow_core::hardy::HardyFunction::zeros(FrequencyGrid::standard());
    assert!(embed_hardy(&zero, &grid).is_zero());
    assert_eq!(momentum(&RadialField::zeros(grid.clone())), 0.0);
    assert_eq!(energy_gamma(&RadialField::zeros(grid), 0.5).unwrap(), 0.0);
}

#[test]
fn heisenberg_cubic_matches_hardy_cubic_on_lowest_block() {
    let grid = RadialGridSpec::default().build().unwrap();
    let f = ground_state_profile(&grid.hardy_grid());
    let u = embed_hardy(&f, &grid);
    let heis = extract_hardy(&cubic_truncated(&u, 1000).unwrap());
    // Lattice sums act as midpoint rules on cells of width sigma_step, i.e. on
    // the band starting at sigma_step/2. The matching trapezoid grid has half
    // the step and starts there; its odd nodes are the lattice.
    let lattice = grid.hardy_grid();
    let h = lattice.step();
    let half = FrequencyGrid::new(h / 2.0, lattice.sigma_max() + h / 2.0, 2 * lattice.len() + 1).unwrap();
    let fine = cubic_projection(&ground_state_profile(&half));
    let hardy = heisflow_core::hardy::HardyFunction::new(
        lattice.clone(),
        (0..lattice.len()).map(|j| fine.coeffs()[2 * j + 1]).collect(),
    )
    .unwrap();
    let rel = (sobolev2(&heis.sub(&hardy), -1).unwrap() / sobolev2(&hardy, -1).unwrap()).sqrt();
    assert!(rel < 1e-2, "{rel}");
}

#[test]
fn zero_field_cubic() {
    let grid = coarse();
    assert!(cubic_truncated(&RadialField::zeros(grid), 4).unwrap().is_zero());
}
