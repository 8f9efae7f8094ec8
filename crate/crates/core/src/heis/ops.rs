use std::sync::Arc;

use num_complex::Complex64;

use super::collocation::{cubic_collocation, l4norm4_radial};
use super::field::RadialField;
use super::grid::{RadialSpectralGrid, Sign};
use crate::error::{Error, Result};
use crate::hardy::{sobolev2, HardyFunction};

/// Multiplier `((k+1)|sigma| - gamma sigma) / (1 - gamma)` of the rescaled
/// linear part on Hermite level `k` at signed frequency `sigma`.
pub fn linear_symbol(level: usize, sigma: f64, gamma: f64) -> Result<f64> {
    check_speed(gamma)?;
    Ok(((level + 1) as f64 * sigma.abs() - gamma * sigma) / (1.0 - gamma))
}

pub fn check_speed(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Speed(gamma));
    }
    Ok(())
}

/// Symbol tensor in coefficient layout.
pub fn linear_symbol_tensor(grid: &RadialSpectralGrid, gamma: f64) -> Result<Vec<f64>> {
    check_speed(gamma)?;
    Ok(RadialField::symbol_tensor(grid, |k, s| ((k + 1) as f64 * s.abs() - gamma * s) / (1.0 - gamma)))
}

/// Keeps Hermite levels `k <= n` and frequencies `1/n <= |sigma| <= n`.
pub fn truncate(u: &RadialField, n: usize) -> Result<RadialField> {
    if n == 0 {
        return Err(Error::InvalidInput("truncation order must be at least 1".into()));
    }
    let (lo, hi) = (1.0 / n as f64, n as f64);
    let zero = Complex64::new(0.0, 0.0);
    Ok(u.map(|k, s, c| if k <= n && s.abs() >= lo && s.abs() <= hi { c } else { zero }))
}

/// `(u⁺, w)`: the lowest positive block and the rest.
pub fn split_plus(u: &RadialField) -> (RadialField, RadialField) {
    let g = u.grid();
    let mut plus = RadialField::zeros(g.clone());
    plus.slab_mut(0, Sign::Plus).copy_from_slice(u.slab(0, Sign::Plus));
    let mut rest = u.clone();
    rest.slab_mut(0, Sign::Plus).iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    (plus, rest)
}

/// Lowest-block lift of a Hardy profile: `g_0^+(sigma) = f(sigma)`.
///
/// When `f` lives on [`RadialSpectralGrid::hardy_grid`] the samples are copied;
/// otherwise they are interpolated, and a warning is logged if more than 1%
/// of the order-1 mass falls outside the band.
pub fn embed_hardy(f: &HardyFunction, grid: &Arc<RadialSpectralGrid>) -> RadialField {
    let mut out = RadialField::zeros(grid.clone());
    let lattice = grid.hardy_grid();
    if *f.grid() == lattice {
        out.slab_mut(0, Sign::Plus).copy_from_slice(f.coeffs());
        return out;
    }
    for j in 0..grid.n_freq() {
        out.set(0, Sign::Plus, j, f.interpolate(grid.sigma(Sign::Plus, j)));
    }
    let before = sobolev2(f, 1).unwrap_or(0.0);
    let after = sobolev2(&extract_hardy(&out), 1).unwrap_or(0.0);
    if before > 0.0 && (before - after) / before > 0.01 {
        log::warn!("embedding kept only {:.2}% of the profile mass", 100.0 * after / before);
    }
    out
}

/// The lowest positive block as a Hardy profile on the lattice grid; other
/// blocks are ignored.
pub fn extract_hardy(u: &RadialField) -> HardyFunction {
    let g = u.grid();
    HardyFunction::new(g.hardy_grid(), u.slab(0, Sign::Plus).to_vec()).expect("field entries are finite")
}

/// `(D_s u, u) = sum sigma |g|^2 mu`.
pub fn momentum(u: &RadialField) -> f64 {
    let g = u.grid();
    let mut acc = 0.0;
    for l in 0..g.n_modes() {
        for sign in Sign::BOTH {
            for (j, c) in u.slab(l, sign).iter().enumerate() {
                acc += g.sigma(sign, j) * c.norm_sqr() * g.measure(j);
            }
        }
    }
    acc
}

/// `(1/2)(Lambda u, u) - (1/4)||u||^4_{L4}`.
pub fn energy_gamma(u: &RadialField, gamma: f64) -> Result<f64> {
    let lam = linear_symbol_tensor(u.grid(), gamma)?;
    Ok(0.5 * quadratic_form(u, &lam) - 0.25 * l4norm4_radial(u))
}

/// `sum m |g|^2 mu` for a multiplier tensor `m`.
pub fn quadratic_form(u: &RadialField, m: &[f64]) -> f64 {
    let g = u.grid();
    let mut acc = 0.0;
    for l in 0..g.n_modes() {
        for sign in Sign::BOTH {
            for (j, c) in u.slab(l, sign).iter().enumerate() {
                acc += m[g.index(l, sign, j)] * c.norm_sqr() * g.measure(j);
            }
        }
    }
    acc
}

/// Truncated cubic nonlinearity `Pi^(n)(|u|^2 u)`.
pub fn cubic_truncated(u: &RadialField, n: usize) -> Result<RadialField> {
    truncate(&cubic_collocation(u), n)
}
