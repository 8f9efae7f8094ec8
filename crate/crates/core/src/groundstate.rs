//! Traveling-wave profiles by Petviashvili iteration and the continuation
//! study of their approach to the limiting profile.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{ground_state_profile, HardyFunction};
use crate::heis::{
    check_speed, cubic_truncated, embed_hardy, extract_hardy, l4norm4_radial, linear_symbol_tensor, momentum,
    split_plus, truncate, RadialField, RadialSpectralGrid, Sign,
};
use crate::modulation::{distance_to_orbit_radial, FitOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for the relative order `-1` residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Admissible range of the Petviashvili stabilizing factor.
    pub stabilizer_bounds: (f64, f64),
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 3000, stabilizer_bounds: (0.1, 10.0) }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub profile: RadialField,
    /// `||Lambda Q - N(Q)||_{-1} / ||Lambda Q||_{-1}`.
    pub residual: f64,
    pub iterations: usize,
    pub stabilizer: f64,
}

/// Cubic term of a stationary problem, possibly restricted to a sub-block.
enum Nonlinearity {
    Truncated(usize),
    LowestBlock(usize),
}

impl Nonlinearity {
    fn apply(&self, u: &RadialField) -> Result<RadialField> {
        match *self {
            Nonlinearity::Truncated(n) => cubic_truncated(u, n),
            Nonlinearity::LowestBlock(n) => Ok(split_plus(&cubic_truncated(u, n)?).0),
        }
    }
}

fn relative_residual(u: &RadialField, symbol: &[f64], nu: &RadialField) -> Result<f64> {
    let lu = u.multiply(symbol);
    let denom = lu.norm_sq(-1)?;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((lu.sub(nu).norm_sq(-1)? / denom).sqrt())
}

fn petviashvili(init: &RadialField, symbol: &[f64], nonlinear: Nonlinearity, opts: &SolverOptions) -> Result<GroundState> {
    if init.is_zero() {
        return Err(Error::CollapsedToZero);
    }
    let inverse: Vec<f64> = symbol.iter().map(|l| 1.0 / l).collect();
    let scale0 = init.norm_sq(1)?;
    let mut u = init.clone();
    let mut stabilizer = 1.0;
    for it in 0..=opts.max_iter {
        let nu = nonlinear.apply(&u)?;
        let residual = relative_residual(&u, symbol, &nu)?;
        if !residual.is_finite() {
            return Err(Error::Diverged { value: residual, iteration: it });
        }
        if residual <= opts.tol {
            return Ok(GroundState { profile: fix_gauge(&u), residual, iterations: it, stabilizer });
        }
        if it == opts.max_iter {
            return Err(Error::Stagnated { iterations: it, residual });
        }
        let num = u.multiply(symbol).inner_order(&u, 0).re;
        let den = nu.inner_order(&u, 0).re;
        stabilizer = num / den;
        let (lo, hi) = opts.stabilizer_bounds;
        if !(stabilizer >= lo && stabilizer <= hi) {
            return Err(Error::Diverged { value: stabilizer, iteration: it });
        }
        u = nu.multiply(&inverse).scale_real(stabilizer.powf(1.5));
        if u.norm_sq(1)? < 1e-24 * scale0 {
            return Err(Error::CollapsedToZero);
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Removes the translation and phase freedom: the lowest positive block gets
/// zero mean phase slope in `sigma` and phase `-pi/2` at its peak, the
/// convention of the explicit profile `-2i sqrt(pi) e^{-sigma}`.
pub fn fix_gauge(u: &RadialField) -> RadialField {
    let g = u.grid();
    let slab = u.slab(0, Sign::Plus);
    let Some((peak, _)) = slab.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())) else {
        return u.clone();
    };
    if slab[peak].norm() == 0.0 {
        return u.clone();
    }
    let (mut num, mut den) = (0.0, 0.0);
    for w in slab.windows(2) {
        let z = w[1] * w[0].conj();
        num += z.norm() * z.arg();
        den += z.norm();
    }
    let slope = if den > 0.0 { num / (den * g.sigma_step()) } else { 0.0 };
    let peak_phase = slab[peak].arg() - slope * g.sigma(Sign::Plus, peak);
    let rotate = -0.5 * PI - peak_phase;
    u.map(|_, sigma, c| c * Complex64::from_polar(1.0, rotate - slope * sigma))
}

/// `||Lambda_beta u - Pi(|u|^2 u)||_{-1} / ||Lambda_beta u||_{-1}`.
pub fn stationary_residual(u: &RadialField, beta: f64, n: usize) -> Result<f64> {
    let symbol = linear_symbol_tensor(u.grid(), beta)?;
    relative_residual(u, &symbol, &cubic_truncated(u, n)?)
}

/// Speed-`beta` traveling-wave profile solving `Lambda_beta Q = Pi^{(n)}(|Q|^2 Q)`.
pub fn solve_ground_state(
    beta: f64,
    grid: &Arc<RadialSpectralGrid>,
    n: usize,
    init: &RadialField,
    tol: f64,
) -> Result<GroundState> {
    solve_ground_state_with(beta, grid, n, init, &SolverOptions { tol, ..SolverOptions::default() })
}

pub fn solve_ground_state_with(
    beta: f64,
    grid: &Arc<RadialSpectralGrid>,
    n: usize,
    init: &RadialField,
    opts: &SolverOptions,
) -> Result<GroundState> {
    check_speed(beta)?;
    if beta < 0.0 {
        return Err(Error::Speed(beta));
    }
    if init.grid() != grid {
        return Err(Error::InvalidInput("initial guess lives on a different grid".into()));
    }
    let symbol = linear_symbol_tensor(grid, beta)?;
    petviashvili(&truncate(init, n)?, &symbol, Nonlinearity::Truncated(n), opts)
}

/// The limiting profile on the lowest positive block: `sigma Q = Pi_0^+(|Q|^2 Q)`.
pub fn solve_limit_profile(grid: &Arc<RadialSpectralGrid>, n: usize, opts: &SolverOptions) -> Result<GroundState> {
    let init = truncate(&embed_hardy(&ground_state_profile(&grid.hardy_grid()), grid), n)?;
    let symbol = RadialField::symbol_tensor(grid, |level, sigma| if level == 0 && sigma > 0.0 { sigma } else { 1.0 });
    petviashvili(&init, &symbol, Nonlinearity::LowestBlock(n), opts)
}

/// `E(sqrt(1-beta) Q_beta)` with `E(u) = ||u||^2_1 / 2 - ||u||^4_{L4} / 4`.
pub fn wave_energy(q_beta: &RadialField, beta: f64) -> Result<f64> {
    let h = 1.0 - beta;
    Ok(0.5 * h * q_beta.norm_sq(1)? - 0.25 * h * h * l4norm4_radial(q_beta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateRow {
    pub beta: f64,
    pub residual: f64,
    pub iterations: usize,
    pub qbeta_norm_h1: f64,
    /// Orbit distance to the limiting profile in the order-1 norm.
    pub dist_to_q: f64,
    /// `||Q_beta - Q_beta^+||_1`.
    pub r_beta_norm: f64,
    /// Conserved-quantity gap of `Q_beta^+` against the limiting profile, half-plane units.
    pub delta_qbeta_plus: f64,
    /// `E(sqrt(1-beta) Q_beta) / ((1-beta) pi^2 / 2)`.
    pub energy_ratio: f64,
    /// Share of the order-1 mass on the top Laguerre level or the outer band edge.
    pub edge_fraction: f64,
    /// `edge_fraction` large enough that truncation may dominate.
    pub truncation_flag: bool,
}

impl GroundStateRow {
    /// `||R_beta|| / ((1-beta) ||Q_beta - Q||)`.
    pub fn bootstrap_constant(&self) -> f64 {
        self.r_beta_norm / ((1.0 - self.beta) * self.dist_to_q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateTable {
    pub rows: Vec<GroundStateRow>,
    /// Log-log slope of `dist_to_q` against `1 - beta`; absent below two rows.
    pub dist_slope: Option<f64>,
    pub r_slope: Option<f64>,
    pub limit_residual: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fraction of the order-1 norm carried where truncation bites.
fn edge_fraction(u: &RadialField) -> f64 {
    let g = u.grid();
    let total = u.norm_sq(1).unwrap_or(0.0);
    if total == 0.0 {
        return 0.0;
    }
    let top = g.n_modes() - 1;
    let edge = (g.n_freq() * 9) / 10;
    let masked = u.map(|level, sigma, c| {
        let j = (sigma.abs() / g.sigma_step()).round() as usize;
        if level == g.level(top) || j > edge {
            c
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    masked.norm_sq(1).unwrap_or(0.0) / total
}

/// Edge share above which a row is flagged.
pub const EDGE_FRACTION_LIMIT: f64 = 1e-2;

/// Solves along increasing speeds, warm-starting each solve from the last.
pub fn continuation_sweep(
    betas: &[f64],
    grid: &Arc<RadialSpectralGrid>,
    n: usize,
    opts: &SolverOptions,
) -> Result<GroundStateTable> {
    continuation_sweep_profiles(betas, grid, n, opts).map(|s| s.table)
}

/// A sweep together with the computed profiles.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub table: GroundStateTable,
    pub limit: GroundState,
    pub profiles: Vec<RadialField>,
}

pub fn continuation_sweep_profiles(
    betas: &[f64],
    grid: &Arc<RadialSpectralGrid>,
    n: usize,
    opts: &SolverOptions,
) -> Result<SweepResult> {
    if betas.is_empty() {
        return Err(Error::InvalidInput("empty speed list".into()));
    }
    if betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("speeds must be strictly increasing".into()));
    }
    let limit = solve_limit_profile(grid, n, opts)?;
    let reference = extract_hardy(&limit.profile);
    let profile = |s: f64| reference.interpolate_to_origin(s);
    let (p_ref, e_ref) = (momentum(&limit.profile), l4norm4_radial(&limit.profile));
    let fit_opts = FitOptions::default();

    let mut rows = Vec::with_capacity(betas.len());
    let mut profiles = Vec::with_capacity(betas.len());
    let mut warm = limit.profile.clone();
    for &beta in betas {
        let sol = solve_ground_state_with(beta, grid, n, &warm, opts)?;
        let q = &sol.profile;
        let (plus, rest) = split_plus(q);
        let fit = distance_to_orbit_radial(q, profile, &fit_opts);
        let delta = ((momentum(&plus) - p_ref).abs() + (l4norm4_radial(&plus) - e_ref).abs()) / PI;
        let edge = edge_fraction(q);
        rows.push(GroundStateRow {
            beta,
            residual: sol.residual,
            iterations: sol.iterations,
            qbeta_norm_h1: q.h1_norm(),
            dist_to_q: fit.distance,
            r_beta_norm: rest.h1_norm(),
            delta_qbeta_plus: delta,
            energy_ratio: wave_energy(q, beta)? / ((1.0 - beta) * PI * PI / 2.0),
            edge_fraction: edge,
            truncation_flag: edge > EDGE_FRACTION_LIMIT,
        });
        profiles.push(sol.profile.clone());
        warm = sol.profile;
    }
    let x: Vec<f64> = rows.iter().map(|r| 1.0 - r.beta).collect();
    let dist: Vec<f64> = rows.iter().map(|r| r.dist_to_q).collect();
    let r: Vec<f64> = rows.iter().map(|r| r.r_beta_norm).collect();
    let table = GroundStateTable {
        dist_slope: loglog_slope(&x, &dist),
        r_slope: loglog_slope(&x, &r),
        rows,
        limit_residual: limit.residual,
    };
    Ok(SweepResult { table, limit, profiles })
}

/// The limiting profile as a half-plane function on the lattice grid.
pub fn limit_profile_hardy(limit: &GroundState) -> HardyFunction {
    extract_hardy(&limit.profile)
}
