use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::FrequencyGrid;
use crate::quadrature::geometric_panels;

/// Sign of the frequency `sigma` dual to the central variable `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

/// Parameters of a [`RadialSpectralGrid`].
///
/// `k_max` is the highest Hermite level `m + p` kept. Radial functions only
/// live on even levels `2l`, carried by the Laguerre mode `l`, so the grid
/// stores `k_max / 2 + 1` modes.
///
/// Frequencies are the lattice points `±m * sigma_step`, `m_lo <= m <= m_hi`,
/// so that they embed in the Fourier lattice of a periodic `s`-box of length
/// `2 pi / sigma_step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGridSpec {
    pub k_max: usize,
    pub sigma_step: f64,
    pub m_lo: usize,
    pub m_hi: usize,
    pub n_s: usize,
    pub points_per_panel: usize,
}

impl Default for RadialGridSpec {
    /// Eight Laguerre modes on the band `[1/128, 6]`.
    fn default() -> Self {
        Self { k_max: 8, sigma_step: 1.0 / 128.0, m_lo: 1, m_hi: 768, n_s: 4096, points_per_panel: 20 }
    }
}

impl RadialGridSpec {
    /// A coarse grid that keeps time stepping cheap.
    pub fn coarse() -> Self {
        Self { k_max: 4, sigma_step: 1.0 / 32.0, m_lo: 1, m_hi: 192, n_s: 1024, points_per_panel: 20 }
    }

    pub fn sigma_lo(&self) -> f64 {
        self.m_lo as f64 * self.sigma_step
    }

    pub fn sigma_hi(&self) -> f64 {
        self.m_hi as f64 * self.sigma_step
    }

    /// Smallest box size free of aliasing for cubic products.
    pub fn min_box_points(&self) -> usize {
        4 * self.m_hi + 1
    }

    pub fn build(&self) -> Result<Arc<RadialSpectralGrid>> {
        RadialSpectralGrid::new(self.clone()).map(Arc::new)
    }
}

/// Radial-in-`(x, y)`, Fourier-in-`s` discretization of functions on the
/// Heisenberg group: Laguerre modes `psi_l(r, sigma) = L_l(2|sigma| r^2) e^{-|sigma| r^2}`
/// (Hermite level `2l`, sub-Laplacian eigenvalue `-(2l+1)|sigma|`) times a
/// frequency lattice, plus the physical collocation grid in `(v = r^2, s)`
/// used to evaluate the cubic term.
pub struct RadialSpectralGrid {
    spec: RadialGridSpec,
    n_freq: usize,
    radial_nodes: Vec<f64>,
    /// Weights for `\int f 2 pi r dr = pi \int f dv`.
    radial_weights: Vec<f64>,
    /// `psi_k(v_q, |sigma_j|)` stored as `[j][k][q]`.
    basis: Vec<f64>,
    pub(crate) forward: Arc<dyn Fft<f64>>,
    pub(crate) inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RadialSpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialSpectralGrid")
            .field("spec", &self.spec)
            .field("radial_points", &self.radial_nodes.len())
            .finish()
    }
}

impl PartialEq for RadialSpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

/// Laguerre polynomials `L_0..=L_k_max` at `x`.
pub fn laguerre_all(k_max: usize, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if k_max >= 1 {
        out[1] = 1.0 - x;
    }
    for k in 1..k_max {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0 - x) * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

impl RadialSpectralGrid {
    pub fn new(spec: RadialGridSpec) -> Result<Self> {
        if !(spec.sigma_step > 0.0 && spec.sigma_step.is_finite()) {
            return Err(Error::InvalidGrid(format!("sigma_step must be positive, got {}", spec.sigma_step)));
        }
        if spec.m_lo == 0 {
            return Err(Error::InvalidGrid("zero frequency is excluded: m_lo must be at least 1".into()));
        }
        if spec.m_hi < spec.m_lo + 7 {
            return Err(Error::InvalidGrid("need at least 8 frequencies per sign".into()));
        }
        if spec.points_per_panel < 2 {
            return Err(Error::InvalidGrid("need at least 2 radial points per panel".into()));
        }
        if spec.n_s < spec.min_box_points() {
            return Err(Error::Aliasing { n_s: spec.n_s, m_hi: spec.m_hi, need: 4 * spec.m_hi });
        }
        let (lo, hi) = (spec.sigma_lo(), spec.sigma_hi());
        let k = spec.k_max as f64;
        // e^{-lo v} times the squared top Laguerre polynomial must be negligible at v_max
        let v_max = (36.0 + 6.0 * k) / (2.0 * lo);
        let (nodes, w) = geometric_panels(1.0 / (8.0 * hi), v_max, spec.points_per_panel);
        let radial_weights: Vec<f64> = w.iter().map(|w| PI * w).collect();
        let n_freq = spec.m_hi - spec.m_lo + 1;
        let nk = spec.k_max / 2 + 1;
        let nq = nodes.len();
        let mut basis = vec![0.0; n_freq * nk * nq];
        let mut lag = vec![0.0; nk];
        for j in 0..n_freq {
            let sigma = (spec.m_lo + j) as f64 * spec.sigma_step;
            for (q, &v) in nodes.iter().enumerate() {
                laguerre_all(nk - 1, 2.0 * sigma * v, &mut lag);
                let e = (-sigma * v).exp();
                for kk in 0..nk {
                    basis[(j * nk + kk) * nq + q] = lag[kk] * e;
                }
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.n_s);
        let inverse = planner.plan_fft_inverse(spec.n_s);
        Ok(Self { spec, n_freq, radial_nodes: nodes, radial_weights, basis, forward, inverse })
    }

    pub fn spec(&self) -> &RadialGridSpec {
        &self.spec
    }

    pub fn k_max(&self) -> usize {
        self.spec.k_max
    }

    /// Number of stored Laguerre modes.
    pub fn n_modes(&self) -> usize {
        self.spec.k_max / 2 + 1
    }

    /// Hermite level of Laguerre mode `l`.
    pub fn level(&self, l: usize) -> usize {
        2 * l
    }

    /// Frequencies per sign.
    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    pub fn n_coeffs(&self) -> usize {
        2 * self.n_modes() * self.n_freq
    }

    pub fn sigma_step(&self) -> f64 {
        self.spec.sigma_step
    }

    /// Lattice index `n` with `sigma = n * sigma_step`.
    pub fn lattice_index(&self, sign: Sign, j: usize) -> i64 {
        let m = (self.spec.m_lo + j) as i64;
        match sign {
            Sign::Plus => m,
            Sign::Minus => -m,
        }
    }

    pub fn sigma(&self, sign: Sign, j: usize) -> f64 {
        self.lattice_index(sign, j) as f64 * self.spec.sigma_step
    }

    /// Spectral measure `pi / (2|sigma|) * d sigma` of node `j`.
    pub fn measure(&self, j: usize) -> f64 {
        PI / (2.0 * self.sigma(Sign::Plus, j)) * self.spec.sigma_step
    }

    pub fn index(&self, mode: usize, sign: Sign, j: usize) -> usize {
        (mode * 2 + sign.index()) * self.n_freq + j
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn n_radial(&self) -> usize {
        self.radial_nodes.len()
    }

    /// `psi_l(v_q, |sigma_j|)` for all `q`.
    pub fn basis_row(&self, j: usize, mode: usize) -> &[f64] {
        let nq = self.radial_nodes.len();
        let start = (j * self.n_modes() + mode) * nq;
        &self.basis[start..start + nq]
    }

    pub fn n_s(&self) -> usize {
        self.spec.n_s
    }

    /// Half-length `L_s = pi / sigma_step` of the periodic `s`-box.
    pub fn s_half_length(&self) -> f64 {
        PI / self.spec.sigma_step
    }

    pub fn s_step(&self) -> f64 {
        2.0 * self.s_half_length() / self.spec.n_s as f64
    }

    pub fn s_nodes(&self) -> Vec<f64> {
        let (l, ds) = (self.s_half_length(), self.s_step());
        (0..self.spec.n_s).map(|m| -l + m as f64 * ds).collect()
    }

    /// The positive half of the frequency lattice as a Hardy-side grid.
    pub fn hardy_grid(&self) -> FrequencyGrid {
        FrequencyGrid::new(self.spec.sigma_lo(), self.spec.sigma_hi(), self.n_freq)
            .expect("lattice has at least 8 positive nodes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_values() {
        let mut l = vec![0.0; 4];
        laguerre_all(3, 2.0, &mut l);
        let want = [1.0, -1.0, 1.0 - 4.0 + 2.0, (-8.0 + 36.0 - 36.0 + 6.0) / 6.0];
        for (a, b) in l.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_aliasing_box() {
        let spec = RadialGridSpec { n_s: 4 * 192, ..RadialGridSpec::coarse() };
        assert!(matches!(RadialSpectralGrid::new(spec), Err(Error::Aliasing { .. })));
        let spec = RadialGridSpec { m_lo: 0, ..RadialGridSpec::coarse() };
        assert!(RadialSpectralGrid::new(spec).is_err());
    }

    #[test]
    fn lattice_and_measure() {
        let g = RadialGridSpec::coarse().build().unwrap();
        assert_eq!(g.sigma(Sign::Minus, 0), -1.0 / 32.0);
        assert_eq!(g.sigma(Sign::Plus, g.n_freq() - 1), 6.0);
        assert!((g.measure(31) - PI / (2.0 * 1.0) / 32.0).abs() < 1e-15);
        let h = g.hardy_grid();
        assert_eq!(h.len(), g.n_freq());
        assert!((h.step() - g.sigma_step()).abs() < 1e-15);
    }
}
