mod common;

use std::f64::consts::PI;

use common::*;
use heisflow_core::hardy::*;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn e1_reference_values() {
    assert!((exp_integral_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-14);
    assert!((exp_integral_e1(2.0) - 0.048_900_510_708_061_13).abs() < 1e-14);
    assert!((exp_integral_e1(1e-3) - 6.331_539_364_136_149).abs() < 1e-12);
}

#[test]
fn fft_cubic_matches_direct_sum() {
    let g = FrequencyGrid::new(0.02, 5.0, 96).unwrap();
    for seed in 0..3 {
        let u = random_bumps(&g, 0.02, 5.0, 3, seed).add(&ground_state_profile(&g));
        let fast = cubic_projection(&u);
        let slow = cubic_projection_direct(&u);
        assert!(max_rel(fast.coeffs(), slow.coeffs()) < 1e-12);
        let (a, b) = (l4norm4(&u), l4norm4_direct(&u));
        assert!((a - b).abs() < 1e-12 * b, "{a} {b}");
    }
}

#[test]
fn zero_in_zero_out() {
    let z = HardyFunction::zeros(FrequencyGrid::standard());
    assert!(cubic_projection(&z).coeffs().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    assert_eq!(l4norm4(&z), 0.0);
    let br = bergman_project_bruteforce(&HardyFunction::zeros(FrequencyGrid::new(0.1, 4.0, 32).unwrap())).unwrap();
    assert!(br.function.coeffs().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn profile_norm_anchors() {
    let q = ground_state_profile(&FrequencyGrid::standard());
    let p = sobolev2(&q, 1).unwrap();
    let e = l4norm4(&q);
    assert!((p / PI - 1.0).abs() < 0.01, "momentum {p}");
    assert!((e / PI - 1.0).abs() < 0.01, "L4 {e}");
}

#[test]
fn profile_is_fixed_point_of_projection() {
    let g = FrequencyGrid::standard();
    let q = ground_state_profile(&g);
    let p = cubic_projection(&q);
    let target = q.map(|s, v| v * s);
    assert!(max_rel(p.coeffs(), target.coeffs()) < 1e-2);
}

#[test]
fn projection_converges_at_second_order() {
    let eps = 1e-3;
    let mut g = FrequencyGrid::new(eps, 30.0, 257).unwrap();
    let mut errs = Vec::new();
    for _ in 0..4 {
        let q = ground_state_profile(&g);
        let p = cubic_projection(&q);
        let exact = HardyFunction::from_fn(g.clone(), |s| truncated_profile_projection(s, eps));
        let diff = p.sub(&exact);
        errs.push(sobolev2(&diff, -1).unwrap().sqrt() / sobolev2(&exact, -1).unwrap().sqrt());
        g = g.refined();
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.5, "errors {errs:?}");
    }
}

#[test]
fn bruteforce_oracle_on_bumps() {
    let g = FrequencyGrid::new(0.05, 6.0, 64).unwrap();
    for seed in [1, 7] {
        let u = random_bumps(&g, 0.05, 6.0, 2, seed);
        let oracle = bergman_project_bruteforce(&u).unwrap();
        let fast = cubic_projection(&u);
        let err = max_rel(fast.coeffs(), oracle.function.coeffs());
        assert!(err < 1e-2, "seed {seed}: {err}, estimate {}", oracle.estimated_error);
        assert!(oracle.captured_fraction > 0.999);
    }
}

#[test]
fn bruteforce_oracle_on_profile() {
    let g = FrequencyGrid::new(1e-3, 8.0, 440).unwrap();
    let q = ground_state_profile(&g);
    let oracle = bergman_project_bruteforce(&q).unwrap();
    let target = q.map(|s, v| v * s);
    let err = max_rel(oracle.function.coeffs(), target.coeffs());
    assert!(err < 1e-2, "{err} (estimate {})", oracle.estimated_error);
    assert!(oracle.estimated_error < 1e-2);
    let fast = cubic_projection(&q);
    assert!(max_rel(fast.coeffs(), oracle.function.coeffs()) < 1e-2);
}

#[test]
fn oracle_rejects_small_window() {
    let g = FrequencyGrid::new(1e-3, 12.0, 320).unwrap();
    let q = ground_state_profile(&g);
    let mut opts = BruteForceOptions::for_grid(&q);
    opts.s_half_width = 3.0;
    opts.height = 3.0;
    assert!(matches!(
        bergman_project_bruteforce_with(&q, &opts),
        Err(heisflow_core::Error::OracleWindow { .. })
    ));
}

#[test]
fn l4_invariant_under_symmetry() {
    let q = ground_state_profile(&FrequencyGrid::standard());
    for x in [
        SymmetryElement::new(1.5, 0.3, 1.0),
        SymmetryElement::new(-2.0, 2.0, 1.2),
        SymmetryElement::new(0.5, -1.0, 0.8),
    ] {
        let e = l4norm4(&apply_symmetry(&q, &x));
        assert!((e / PI - 1.0).abs() < 0.01, "{x:?}: {e}");
    }
}

#[test]
fn unitarity_on_profile_for_moderate_scales() {
    let g = FrequencyGrid::new(1e-6, 40.0, 8192).unwrap();
    let q = ground_state_profile(&g);
    let p0 = sobolev2(&q, 1).unwrap();
    for alpha in [0.5, 0.8, 1.25, 2.0] {
        let img = apply_symmetry(&q, &SymmetryElement::new(0.3, 1.0, alpha));
        let p = sobolev2(&img, 1).unwrap();
        assert!((p / p0 - 1.0).abs() < 1e-3, "alpha {alpha}: {}", p / p0 - 1.0);
    }
}

fn element() -> impl Strategy<Value = SymmetryElement> {
    (-5.0..5.0f64, 0.0..(2.0 * PI), 0.5..2.0f64).prop_map(|(s, t, a)| SymmetryElement::new(s, t, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unitary_on_interior_bumps(x in element(), seed in 0u64..1000) {
        let g = FrequencyGrid::new(0.01, 40.0, 4096).unwrap();
        let u = random_bumps(&g, 2.5, 9.0, 3, seed);
        let img = apply_symmetry_checked(&u, &x);
        let (a, b) = (sobolev2(&img.function, 1).unwrap(), sobolev2(&u, 1).unwrap());
        prop_assert!((a - b).abs() <= 1e-6 * b, "rel {}", (a - b) / b);
    }

    #[test]
    fn inverse_undoes_action(x in element(), seed in 0u64..1000) {
        let g = FrequencyGrid::new(0.01, 40.0, 16384).unwrap();
        let u = random_bumps(&g, 2.5, 9.0, 3, seed);
        let back = apply_symmetry(&apply_symmetry(&u, &x), &x.inverse());
        prop_assert!(back.sub(&u).norm() <= 1e-6 * u.norm());
    }

    #[test]
    fn cauchy_schwarz(a in 0u64..500, b in 0u64..500) {
        let g = FrequencyGrid::new(0.05, 6.0, 128).unwrap();
        let u = random_bumps(&g, 0.05, 6.0, 2, a);
        let v = random_bumps(&g, 0.05, 6.0, 2, b + 1000);
        prop_assert!(u.inner(&v).norm() <= u.norm() * v.norm() * (1.0 + 1e-14));
    }

    #[test]
    fn momentum_and_energy_invariant_under_translation_and_phase(s in -5.0..5.0f64, t in 0.0..6.0f64) {
        let q = ground_state_profile(&FrequencyGrid::new(1e-3, 30.0, 512).unwrap());
        let img = apply_symmetry(&q, &SymmetryElement::new(s, t, 1.0));
        prop_assert!((sobolev2(&img, 1).unwrap() - sobolev2(&q, 1).unwrap()).abs() < 1e-12);
        prop_assert!((l4norm4(&img) - l4norm4(&q)).abs() < 1e-12);
    }
}

#[test]
fn projection_output_stays_on_band() {
    let g = FrequencyGrid::new(0.05, 6.0, 64).unwrap();
    let u = random_bumps(&g, 0.05, 6.0, 3, 3);
    let p = cubic_projection(&u);
    assert_eq!(p.grid(), u.grid());
    let again = HardyFunction::new(g.clone(), p.coeffs().to_vec()).unwrap();
    assert_eq!(again, p);
}
