use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::FrequencyGrid;
use crate::error::{Error, Result};

/// Samples `f(sigma_j)` of the frequency profile of a holomorphic function
/// `F(z) = (2 pi)^{-1/2} \int e^{i z sigma} f(sigma) d sigma` on the upper half-plane.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyFunction {
    grid: FrequencyGrid,
    coeffs: Vec<Complex64>,
}

impl HardyFunction {
    pub fn new(grid: FrequencyGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a grid of {} nodes",
                coeffs.len(),
                grid.len()
            )));
        }
        if let Some(j) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite coefficient at node {j}")));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: FrequencyGrid) -> Self {
        let n = grid.len();
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = grid.nodes().into_iter().map(f).collect();
        Self { grid, coeffs }
    }

    /// Caller guarantees the length matches and entries are finite.
    pub(crate) fn from_parts(grid: FrequencyGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(grid.len(), coeffs.len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| f(self.grid.node(j), c))
            .collect();
        Self { grid: self.grid.clone(), coeffs }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "functions live on different grids");
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
        self.map(|_, v| v * c)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: Complex64, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + c * b)
    }

    /// Weighted pairing `(1/2) sum_j w_j sigma_j^{k-1} a_j conj(b_j)`. For
    /// `k = 1` this is the inner product whose norm is [`sobolev2`] at order 1.
    pub fn inner_order(&self, other: &Self, k: i32) -> Complex64 {
        assert_eq!(self.grid, other.grid, "functions live on different grids");
        let g = &self.grid;
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(j, (&a, &b))| a * b.conj() * (0.5 * g.weight(j) * g.node(j).powi(k - 1)))
            .sum()
    }

    /// The energy-space inner product (order 1).
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.inner_order(other, 1)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    /// Cubic interpolation of the samples at an arbitrary frequency; zero
    /// outside `[sigma_min, sigma_max]`.
    pub fn interpolate(&self, sigma: f64) -> Complex64 {
        interpolate_cubic(&self.grid, &self.coeffs, sigma)
    }

    /// As [`Self::interpolate`], but continued below the band down to zero
    /// frequency with the first stencil.
    pub fn interpolate_to_origin(&self, sigma: f64) -> Complex64 {
        interpolate_cubic_to_origin(&self.grid, &self.coeffs, sigma)
    }
}

pub(crate) fn interpolate_cubic(grid: &FrequencyGrid, values: &[Complex64], sigma: f64) -> Complex64 {
    if !grid.contains(sigma) {
        return Complex64::new(0.0, 0.0);
    }
    stencil_cubic(grid, values, sigma)
}

/// Like [`interpolate_cubic`] but continues the profile below the band down
/// to zero frequency with the first stencil. A hard zero at the first node
/// would cost `O(h)` in every trapezoid functional of a dilated profile.
pub(crate) fn interpolate_cubic_to_origin(grid: &FrequencyGrid, values: &[Complex64], sigma: f64) -> Complex64 {
    if sigma > 0.0 && sigma < grid.sigma_min() {
        return stencil_cubic(grid, values, sigma);
    }
    interpolate_cubic(grid, values, sigma)
}

fn stencil_cubic(grid: &FrequencyGrid, values: &[Complex64], sigma: f64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let n = grid.len();
    let x = (sigma - grid.sigma_min()) / grid.step();
    let j = (x.max(0.0).floor() as usize).min(n - 2);
    if x == j as f64 {
        return values[j];
    }
    // four-point stencil, pushed inward at the ends
    let start = j.saturating_sub(1).min(n - 4);
    let u = x - start as f64;
    let mut acc = zero;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (u - b as f64) / (a as f64 - b as f64);
            }
        }
        acc += values[start + a] * l;
    }
    acc
}

/// `f(sigma) = -2i sqrt(pi) e^{-sigma}`, the profile of `sqrt(2)/(z+i)`.
pub fn ground_state_profile(grid: &FrequencyGrid) -> HardyFunction {
    let c = Complex64::new(0.0, -2.0 * PI.sqrt());
    HardyFunction::from_fn(grid.clone(), |s| c * (-s).exp())
}

/// `(1/2) sum_j w_j sigma_j^{k-1} |f_j|^2` for `k` in `{-1, 0, 1}`.
pub fn sobolev2(u: &HardyFunction, k: i32) -> Result<f64> {
    if !(-1..=1).contains(&k) {
        return Err(Error::SobolevOrder(k));
    }
    Ok(u.inner_order(u, k).re)
}

/// Direct quadrature of the Paley-Wiener integral at points of the upper
/// half-plane.
pub fn synthesize(u: &HardyFunction, points: &[Complex64]) -> Result<Vec<Complex64>> {
    if let Some(z) = points.iter().find(|z| !(z.im > 0.0)) {
        return Err(Error::OutsideHalfPlane(*z));
    }
    let g = u.grid();
    let norm = (2.0 * PI).sqrt().recip();
    Ok(points
        .iter()
        .map(|&z| {
            let acc: Complex64 = u
                .coeffs()
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    let s = g.node(j);
                    c * (Complex64::i() * z * s).exp() * g.weight(j)
                })
                .sum();
            acc * norm
        })
        .collect())
}
