#![allow(dead_code)]

use heisflow_core::hardy::{FrequencyGrid, HardyFunction};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Exponential integral E1(x), x > 0.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        let euler = 0.577_215_664_901_532_9;
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        -euler - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut cc = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            cc = b + a / cc;
            let del = cc * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Exact cubic projection of the ground-state profile when frequencies are
/// cut below at `eps` (and the upper cut is negligible).
pub fn truncated_profile_projection(tau: f64, eps: f64) -> Complex64 {
    let f = c(0.0, -2.0 * std::f64::consts::PI.sqrt()) * (-tau).exp();
    let a = tau + eps;
    f * (2.0 * tau * (2.0 * tau).exp() * ((-2.0 * a).exp() / 2.0 - 2.0 * eps * exp_integral_e1(2.0 * a)))
}

/// Smooth compactly supported bump centred at `center` with half-width `width`.
pub fn bump(sigma: f64, center: f64, width: f64) -> f64 {
    let x = (sigma - center) / width;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp() * std::f64::consts::E
    }
}

/// Sum of a few random bumps with random complex amplitudes inside `[lo, hi]`.
pub fn random_bumps(grid: &FrequencyGrid, lo: f64, hi: f64, count: usize, seed: u64) -> HardyFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts: Vec<(f64, f64, Complex64)> = (0..count)
        .map(|_| {
            let width = rng.gen_range(0.2..0.45) * (hi - lo);
            let center = rng.gen_range(lo + width..=hi - width);
            let amp = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (center, width, amp)
        })
        .collect();
    HardyFunction::from_fn(grid.clone(), |s| {
        parts.iter().map(|&(m, w, a)| a * bump(s, m, w)).sum()
    })
}

pub fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Smallest radial grid that still carries two Laguerre modes; used where
/// many time steps are needed.
pub fn tiny_spec() -> heisflow_core::heis::RadialGridSpec {
    heisflow_core::heis::RadialGridSpec {
        k_max: 2,
        sigma_step: 1.0 / 16.0,
        m_lo: 1,
        m_hi: 64,
        n_s: 288,
        points_per_panel: 12,
    }
}
