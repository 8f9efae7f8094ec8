//! The Bergman-projected cubic nonlinearity and the L4 functional.
//!
//! On a uniform lattice the four frequencies of every resonant quadruple
//! satisfy `i + k = j + l`, and the kernel denominator only depends on the
//! index sum `s = j + l`. Both sums therefore factor through the
//! self-convolution `B_s = sum_{j+l=s} (w f)_j (w f)_l`, which an FFT gives
//! in `O(N log N)`. The `*_direct` variants evaluate the same sums term by
//! term and serve as oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::function::HardyFunction;
use super::grid::FrequencyGrid;

/// Planned transforms and kernel denominators for one grid.
#[derive(Clone)]
pub struct TrilinearKernel {
    grid: FrequencyGrid,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `sigma_i + sigma_j + sigma_k + sigma_l` indexed by `s = j + l`
    denom: Vec<f64>,
}

impl std::fmt::Debug for TrilinearKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrilinearKernel").field("grid", &self.grid).field("fft_size", &self.size).finish()
    }
}

impl TrilinearKernel {
    pub fn new(grid: &FrequencyGrid) -> Self {
        let n = grid.len();
        let size = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let (eps, h) = (grid.sigma_min(), grid.step());
        let denom = (0..2 * n - 1).map(|s| 2.0 * (2.0 * eps + s as f64 * h)).collect();
        Self { grid: grid.clone(), size, forward, inverse, denom }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Pair sums `B_s`, `s = 0..2N-1` (the last entry is zero padding).
    fn pair_sums(&self, f: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (j, (b, &v)) in buf.iter_mut().zip(f).enumerate() {
            *b = v * g.weight(j);
        }
        self.forward.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        for b in buf.iter_mut() {
            *b = *b * *b * scale;
        }
        self.inverse.process(&mut buf);
        buf
    }

    /// `p_i = (sigma_i/pi) sum_{j,l} w_j w_l c_k f_j conj(f_k) f_l / (sigma_i+sigma_j+sigma_k+sigma_l)`
    /// with `k = j + l - i` restricted to the grid (`c_k` the trapezoid end factor).
    pub fn cubic(&self, f: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.len();
        assert_eq!(f.len(), n);
        let mut a = self.pair_sums(f);
        for (s, v) in a.iter_mut().enumerate() {
            *v = if s < self.denom.len() { *v / self.denom[s] } else { Complex64::new(0.0, 0.0) };
        }
        // p_i = sum_k A_{i+k} b_k with b_k = c_k conj(f_k): a correlation, done
        // as a convolution with the index-reversed sequence.
        let mut rev = vec![Complex64::new(0.0, 0.0); self.size];
        for k in 0..n {
            let idx = (self.size - k) % self.size;
            rev[idx] = f[k].conj() * g.end_factor(k);
        }
        self.forward.process(&mut a);
        self.forward.process(&mut rev);
        let scale = 1.0 / self.size as f64;
        for (x, y) in a.iter_mut().zip(&rev) {
            *x = *x * *y * scale;
        }
        self.inverse.process(&mut a);
        a.truncate(n);
        for (i, v) in a.iter_mut().enumerate() {
            *v *= g.node(i) / PI;
        }
        a
    }

    /// `||F||^4_{L4}` in the same discretization as [`Self::cubic`].
    pub fn l4norm4(&self, f: &[Complex64]) -> f64 {
        let b = self.pair_sums(f);
        let h = self.grid.step();
        let total: f64 = self.denom.iter().zip(&b).map(|(d, v)| v.norm_sqr() / d).sum();
        total / (2.0 * PI * h)
    }
}

/// The cubic nonlinearity projected back onto the holomorphic frequencies of the grid.
pub fn cubic_projection(u: &HardyFunction) -> HardyFunction {
    let kernel = TrilinearKernel::new(u.grid());
    HardyFunction::from_parts(u.grid().clone(), kernel.cubic(u.coeffs()))
}

/// `||F||^4` in `L^4` of the upper half-plane.
pub fn l4norm4(u: &HardyFunction) -> f64 {
    TrilinearKernel::new(u.grid()).l4norm4(u.coeffs())
}

/// Term-by-term `O(N^3)` evaluation of [`cubic_projection`], parallel over the output index.
pub fn cubic_projection_direct(u: &HardyFunction) -> HardyFunction {
    let g = u.grid();
    let n = g.len();
    let f = u.coeffs();
    let w = g.weights();
    let sig = g.nodes();
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                for l in 0..n {
                    let Some(k) = (j + l).checked_sub(i) else { continue };
                    if k >= n {
                        continue;
                    }
                    let d = sig[i] + sig[j] + sig[k] + sig[l];
                    acc += f[j] * f[k].conj() * f[l] * (w[j] * w[l] * g.end_factor(k) / d);
                }
            }
            acc * (sig[i] / PI)
        })
        .collect();
    HardyFunction::from_parts(g.clone(), out)
}

/// Term-by-term quadruple sum for [`l4norm4`].
pub fn l4norm4_direct(u: &HardyFunction) -> f64 {
    let g = u.grid();
    let n = g.len();
    let f = u.coeffs();
    let w = g.weights();
    let sig = g.nodes();
    let parts: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                for l in 0..n {
                    let Some(m) = (j + l).checked_sub(k) else { continue };
                    if m >= n {
                        continue;
                    }
                    let d = sig[j] + sig[k] + sig[l] + sig[m];
                    acc += f[j] * f[k].conj() * f[l] * f[m].conj() * (w[j] * w[k] * w[l] * g.end_factor(m) / d);
                }
            }
            acc.re
        })
        .collect();
    parts.iter().sum::<f64>() / (2.0 * PI)
}
