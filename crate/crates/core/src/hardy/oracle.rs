//! Brute-force Bergman projection on a truncated half-plane window.
//!
//! Slow and only meant to cross-check [`super::cubic_projection`]: the
//! function is synthesized on an `(s, t)` grid, cubed pointwise, pushed
//! through the Bergman kernel `-(1/pi) (z - s' + i t')^{-2}` by direct 2D
//! quadrature onto a horizontal line, and Fourier analysed back to
//! frequency samples.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::function::HardyFunction;
use crate::error::{Error, Result};
use crate::quadrature::geometric_panels;

#[derive(Clone, Debug)]
pub struct BruteForceOptions {
    /// Half-width of the window in `s`.
    pub s_half_width: f64,
    /// Upper end of the window in `t`.
    pub height: f64,
    /// Spacing of the `s` lattice (window and output line share it).
    pub s_step: f64,
    /// First panel of the composite rule in `t`.
    pub t_first_panel: f64,
    pub t_points_per_panel: usize,
    /// Height of the output line.
    pub eval_height: f64,
    /// Minimum share of the L4 mass the window must capture.
    pub min_captured: f64,
}

impl BruteForceOptions {
    /// Window sized from the grid: it must stay inside one period `2 pi / h`
    /// of the sampled synthesis and resolve the highest frequency.
    pub fn for_grid(u: &HardyFunction) -> Self {
        let g = u.grid();
        let period_half = PI / g.step();
        let s_half_width = (0.9 * period_half).min(150.0);
        Self {
            s_half_width,
            height: s_half_width,
            s_step: (0.4 * PI / g.sigma_max()).min(0.2),
            t_first_panel: (0.25 / g.sigma_max()).min(0.05),
            t_points_per_panel: 12,
            eval_height: 0.25,
            min_captured: 0.999,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BruteForceProjection {
    pub function: HardyFunction,
    /// Error estimate relative to the largest output coefficient.
    pub estimated_error: f64,
    /// Share of `||F||^4_{L4}` inside the window.
    pub captured_fraction: f64,
}

pub fn bergman_project_bruteforce(u: &HardyFunction) -> Result<BruteForceProjection> {
    bergman_project_bruteforce_with(u, &BruteForceOptions::for_grid(u))
}

pub fn bergman_project_bruteforce_with(
    u: &HardyFunction,
    opts: &BruteForceOptions,
) -> Result<BruteForceProjection> {
    let g = u.grid();
    let zero = Complex64::new(0.0, 0.0);
    if u.coeffs().iter().all(|c| *c == zero) {
        return Ok(BruteForceProjection {
            function: HardyFunction::zeros(g.clone()),
            estimated_error: 0.0,
            captured_fraction: 1.0,
        });
    }
    let n_s = (2.0 * opts.s_half_width / opts.s_step).round() as usize + 1;
    let ds = 2.0 * opts.s_half_width / (n_s - 1) as f64;
    let s_nodes: Vec<f64> = (0..n_s).map(|m| -opts.s_half_width + m as f64 * ds).collect();
    let s_w: Vec<f64> = (0..n_s).map(|m| if m == 0 || m + 1 == n_s { 0.5 * ds } else { ds }).collect();
    let (t_nodes, t_w) = geometric_panels(opts.t_first_panel, opts.height, opts.t_points_per_panel);

    let sig = g.nodes();
    let w = g.weights();
    let norm = (2.0 * PI).sqrt().recip();
    // F(s + i t) = (2 pi)^{-1/2} sum_j w_j f_j e^{-t sigma_j} e^{i s sigma_j}
    let field: Vec<Vec<Complex64>> = t_nodes
        .par_iter()
        .map(|&t| {
            let damped: Vec<Complex64> =
                u.coeffs().iter().enumerate().map(|(j, &c)| c * (w[j] * (-t * sig[j]).exp() * norm)).collect();
            s_nodes
                .iter()
                .map(|&s| {
                    let mut acc = zero;
                    for (j, &c) in damped.iter().enumerate() {
                        acc += c * Complex64::from_polar(1.0, s * sig[j]);
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let mut l4_window = 0.0;
    for (row, tw) in field.iter().zip(&t_w) {
        for (v, sw) in row.iter().zip(&s_w) {
            l4_window += tw * sw * v.norm_sqr().powi(2);
        }
    }
    let l4_total = super::l4norm4(u);
    let captured_fraction = (l4_window / l4_total).min(1.0);
    if captured_fraction < opts.min_captured {
        return Err(Error::OracleWindow { captured: captured_fraction });
    }

    // weighted cubic source
    let source: Vec<Vec<Complex64>> = field
        .iter()
        .zip(&t_w)
        .map(|(row, tw)| row.iter().zip(&s_w).map(|(v, sw)| v * v.norm_sqr() * (tw * sw)).collect())
        .collect();

    let t0 = opts.eval_height;
    let line: Vec<Complex64> = s_nodes
        .par_iter()
        .map(|&s| {
            let mut acc = zero;
            for (row, &t) in source.iter().zip(&t_nodes) {
                let im = t0 + t;
                for (v, &sp) in row.iter().zip(&s_nodes) {
                    let d = Complex64::new(s - sp, im);
                    acc += v / (d * d);
                }
            }
            -acc / PI
        })
        .collect();

    // p(tau) = (2 pi)^{-1/2} e^{tau t0} \int P(s + i t0) e^{-i s tau} ds
    let coeffs: Vec<Complex64> = sig
        .par_iter()
        .map(|&tau| {
            let mut acc = zero;
            for ((v, &s), &sw) in line.iter().zip(&s_nodes).zip(&s_w) {
                acc += v * Complex64::from_polar(sw, -s * tau);
            }
            acc * (norm * (tau * t0).exp())
        })
        .collect();

    // The line decays like s^{-2}; integrating the missing tails by parts
    // bounds them by |P(edge)| * min(S, 1/tau), amplified by e^{tau t0}.
    let edge = line[0].norm().max(line[n_s - 1].norm());
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tail = sig
        .iter()
        .zip(&coeffs)
        .map(|(&tau, _)| edge * norm * opts.s_half_width.min(1.0 / tau) * (tau * t0).exp())
        .fold(0.0, f64::max);
    let estimated_error = if peak > 0.0 { tail / peak + (1.0 - captured_fraction) } else { 0.0 };

    Ok(BruteForceProjection {
        function: HardyFunction::new(g.clone(), coeffs)?,
        estimated_error,
        captured_fraction,
    })
}
