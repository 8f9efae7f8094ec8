use std::sync::Arc;

use num_complex::Complex64;

use super::grid::{RadialSpectralGrid, Sign};
use crate::error::{Error, Result};

/// Coefficients `g_l^±(sigma)` of a radial function on the Heisenberg group,
/// indexed by Laguerre mode `l`, sign of `sigma` and frequency node.
///
/// Closures passed to [`RadialField::from_fn`], [`RadialField::map`] and
/// [`RadialField::symbol_tensor`] receive the Hermite level `2l`.
#[derive(Clone, Debug)]
pub struct RadialField {
    grid: Arc<RadialSpectralGrid>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for RadialField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.coeffs == other.coeffs
    }
}

impl RadialField {
    pub fn zeros(grid: Arc<RadialSpectralGrid>) -> Self {
        let n = grid.n_coeffs();
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_coeffs(grid: Arc<RadialSpectralGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_coeffs() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a grid holding {}",
                coeffs.len(),
                grid.n_coeffs()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self { grid, coeffs })
    }

    /// Field built from `f(level, sigma)`.
    pub fn from_fn(grid: Arc<RadialSpectralGrid>, f: impl Fn(usize, f64) -> Complex64) -> Self {
        let mut out = Self::zeros(grid.clone());
        for l in 0..grid.n_modes() {
            for sign in Sign::BOTH {
                for j in 0..grid.n_freq() {
                    out.coeffs[grid.index(l, sign, j)] = f(grid.level(l), grid.sigma(sign, j));
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<RadialSpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn get(&self, mode: usize, sign: Sign, j: usize) -> Complex64 {
        self.coeffs[self.grid.index(mode, sign, j)]
    }

    pub fn set(&mut self, mode: usize, sign: Sign, j: usize, value: Complex64) {
        let i = self.grid.index(mode, sign, j);
        self.coeffs[i] = value;
    }

    pub fn slab(&self, mode: usize, sign: Sign) -> &[Complex64] {
        let start = self.grid.index(mode, sign, 0);
        &self.coeffs[start..start + self.grid.n_freq()]
    }

    pub fn slab_mut(&mut self, mode: usize, sign: Sign) -> &mut [Complex64] {
        let start = self.grid.index(mode, sign, 0);
        let n = self.grid.n_freq();
        &mut self.coeffs[start..start + n]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Applies `f(level, sigma, value)` entrywise.
    pub fn map(&self, f: impl Fn(usize, f64, Complex64) -> Complex64) -> Self {
        let g = &self.grid;
        let mut out = self.clone();
        for l in 0..g.n_modes() {
            for sign in Sign::BOTH {
                for j in 0..g.n_freq() {
                    let i = g.index(l, sign, j);
                    out.coeffs[i] = f(g.level(l), g.sigma(sign, j), self.coeffs[i]);
                }
            }
        }
        out
    }

    /// Entrywise product with a real multiplier tensor of the same layout.
    pub fn multiply(&self, m: &[f64]) -> Self {
        let coeffs = self.coeffs.iter().zip(m).map(|(c, m)| c * m).collect();
        Self { grid: self.grid.clone(), coeffs }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid, "fields on different grids");
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|v| v * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|v| v * c).collect() }
    }

    /// `self + c * other`
    pub fn axpy(&self, c: Complex64, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + c * b)
    }

    /// `sum ((level+1)|sigma|)^order a conj(b) mu` over all modes, signs and frequencies.
    pub fn inner_order(&self, other: &Self, order: i32) -> Complex64 {
        let g = &self.grid;
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..g.n_modes() {
            for sign in Sign::BOTH {
                let a = self.slab(l, sign);
                let b = other.slab(l, sign);
                for j in 0..g.n_freq() {
                    let lam = (g.level(l) + 1) as f64 * g.sigma(Sign::Plus, j);
                    acc += a[j] * b[j].conj() * (lam.powi(order) * g.measure(j));
                }
            }
        }
        acc
    }

    /// Squared homogeneous Sobolev norm of order `-1..=2`.
    pub fn norm_sq(&self, order: i32) -> Result<f64> {
        if !(-1..=2).contains(&order) {
            return Err(Error::SobolevOrder(order));
        }
        Ok(self.inner_order(self, order).re)
    }

    /// Energy-space norm (order 1).
    pub fn h1_norm(&self) -> f64 {
        self.inner_order(self, 1).re.max(0.0).sqrt()
    }

    /// Real multiplier tensor `f(level, sigma)` in coefficient layout.
    pub fn symbol_tensor(grid: &RadialSpectralGrid, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; grid.n_coeffs()];
        for l in 0..grid.n_modes() {
            for sign in Sign::BOTH {
                for j in 0..grid.n_freq() {
                    out[grid.index(l, sign, j)] = f(grid.level(l), grid.sigma(sign, j));
                }
            }
        }
        out
    }
}
