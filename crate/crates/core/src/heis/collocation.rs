//! Physical-space evaluation of the cubic term on the `(v = r^2, s)` grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::RadialField;
use super::grid::{RadialSpectralGrid, Sign};

/// Samples `u(v_q, s_m)` stored as `[q][m]`.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    pub values: Vec<Vec<Complex64>>,
}

fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn box_slot(grid: &RadialSpectralGrid, n: i64) -> usize {
    n.rem_euclid(grid.n_s() as i64) as usize
}

/// `u(v, s) = (2 pi)^{-1/2} sum_sigma e^{i s sigma} sum_k g_k(sigma) psi_k(v, sigma) d sigma`.
pub fn to_physical(u: &RadialField) -> PhysicalField {
    let g = u.grid();
    let nq = g.n_radial();
    let nf = g.n_freq();
    // radial synthesis, [sign][j][q]
    let radial: Vec<Vec<Vec<Complex64>>> = Sign::BOTH
        .iter()
        .map(|&sign| {
            (0..nf)
                .into_par_iter()
                .map(|j| {
                    let mut col = vec![Complex64::new(0.0, 0.0); nq];
                    for k in 0..g.n_modes() {
                        let c = u.get(k, sign, j);
                        if c.re == 0.0 && c.im == 0.0 {
                            continue;
                        }
                        for (acc, &psi) in col.iter_mut().zip(g.basis_row(j, k)) {
                            *acc += c * psi;
                        }
                    }
                    col
                })
                .collect()
        })
        .collect();
    let scale = g.sigma_step() / (2.0 * PI).sqrt();
    let values = (0..nq)
        .into_par_iter()
        .map(|q| {
            let mut buf = vec![Complex64::new(0.0, 0.0); g.n_s()];
            for sign in Sign::BOTH {
                for j in 0..nf {
                    let n = g.lattice_index(sign, j);
                    buf[box_slot(g, n)] = radial[sign.index()][j][q] * (parity(n) * scale);
                }
            }
            g.inverse.process(&mut buf);
            buf
        })
        .collect();
    PhysicalField { values }
}

/// Analysis of physical samples back to the spectral tensor: Fourier
/// transform in `s` followed by Laguerre projection in `v`.
pub fn from_physical(grid: &std::sync::Arc<RadialSpectralGrid>, w: PhysicalField) -> RadialField {
    let g = grid;
    let nq = g.n_radial();
    let nf = g.n_freq();
    let scale = g.s_step() / (2.0 * PI).sqrt();
    // hat w, [q][sign][j]
    let spectral: Vec<[Vec<Complex64>; 2]> = w
        .values
        .into_par_iter()
        .map(|mut buf| {
            g.forward.process(&mut buf);
            let pick = |sign: Sign| -> Vec<Complex64> {
                (0..nf)
                    .map(|j| {
                        let n = g.lattice_index(sign, j);
                        buf[box_slot(g, n)] * (parity(n) * scale)
                    })
                    .collect()
            };
            [pick(Sign::Plus), pick(Sign::Minus)]
        })
        .collect();
    let weights = g.radial_weights();
    let mut out = RadialField::zeros(grid.clone());
    for sign in Sign::BOTH {
        let cols: Vec<Vec<Complex64>> = (0..nf)
            .into_par_iter()
            .map(|j| {
                let norm = 2.0 * g.sigma(Sign::Plus, j) / PI;
                (0..g.n_modes())
                    .map(|k| {
                        let psi = g.basis_row(j, k);
                        let mut acc = Complex64::new(0.0, 0.0);
                        for q in 0..nq {
                            acc += spectral[q][sign.index()][j] * (weights[q] * psi[q]);
                        }
                        acc * norm
                    })
                    .collect()
            })
            .collect();
        for (j, col) in cols.into_iter().enumerate() {
            for (k, v) in col.into_iter().enumerate() {
                out.set(k, sign, j, v);
            }
        }
    }
    out
}

impl PhysicalField {
    /// `\int |u|^p` over the collocation grid, `dx dy ds = pi dv ds`.
    pub fn power_integral(&self, grid: &RadialSpectralGrid, p: i32) -> f64 {
        let ds = grid.s_step();
        let per_q: Vec<f64> = self
            .values
            .iter()
            .map(|row| row.iter().map(|v| v.norm().powi(p)).sum::<f64>())
            .collect();
        per_q.iter().zip(grid.radial_weights()).map(|(s, w)| s * w).sum::<f64>() * ds
    }

    pub fn cube_in_place(&mut self) {
        for row in &mut self.values {
            for v in row.iter_mut() {
                *v *= v.norm_sqr();
            }
        }
    }
}

/// Untruncated collocation cubic `|u|^2 u` projected onto the grid.
pub fn cubic_collocation(u: &RadialField) -> RadialField {
    let mut phys = to_physical(u);
    phys.cube_in_place();
    from_physical(u.grid(), phys)
}

/// `||u||^4_{L4}` on the collocation grid.
pub fn l4norm4_radial(u: &RadialField) -> f64 {
    to_physical(u).power_integral(u.grid(), 4)
}

/// `||u||^2_{L2}` on the collocation grid.
pub fn l2norm2_collocation(u: &RadialField) -> f64 {
    to_physical(u).power_integral(u.grid(), 2)
}
