//! Time stepping of the truncated half-plane flow and of the rescaled
//! Heisenberg flow, with conservation monitors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{l4norm4, sobolev2, HardyFunction, TrilinearKernel};
use crate::heis::{cubic_truncated, energy_gamma, linear_symbol_tensor, momentum, split_plus, truncate, RadialField};

/// Relative momentum drift beyond which a run is declared invalid.
pub const DRIFT_LIMIT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Classical explicit fourth-order Runge-Kutta.
    Rk4,
    /// Integrating-factor RK4: the diagonal linear part is propagated exactly.
    Ifrk4,
    /// Cox-Matthews exponential time differencing, fourth order.
    Etdrk4,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Scheme::Rk4),
            "ifrk4" => Ok(Scheme::Ifrk4),
            "etdrk4" => Ok(Scheme::Etdrk4),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Step, negative to run backwards.
    pub dt: f64,
    /// Signed duration, same sign as `dt`.
    pub t_final: f64,
    /// Snapshot stride in steps.
    pub sample_every: usize,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64, t_final: f64, sample_every: usize) -> Self {
        Self { scheme, dt, t_final, sample_every }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(Error::InvalidInput(format!("time step must be finite and nonzero, got {}", self.dt)));
        }
        if !self.t_final.is_finite() || self.t_final / self.dt < 0.0 {
            return Err(Error::InvalidInput("duration and time step must share a sign".into()));
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "duration {} is not a whole number of steps {}",
                self.t_final, self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidInput("sample stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Diagnostics recorded at each snapshot.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
    pub w_norm: Vec<f64>,
    pub uplus_norm: Vec<f64>,
    pub dt_norm: Vec<f64>,
    /// Filled in by orbit tracking; `NaN` until then.
    pub dist_orbit: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub snapshots: Vec<S>,
    pub series: Series,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &S {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// Largest relative deviation of a series from its first entry.
    pub fn relative_drift(values: &[f64]) -> f64 {
        let Some(&first) = values.first() else { return 0.0 };
        let scale = if first != 0.0 { first.abs() } else { 1.0 };
        values.iter().map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
    }
}

/// Diagonal exponential data for one scheme and step.
struct Stepper {
    scheme: Scheme,
    dt: f64,
    /// `e^{L dt}`, `e^{L dt/2}`
    full: Vec<Complex64>,
    half: Vec<Complex64>,
    /// ETDRK4 weights
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

/// Contour-integral evaluation of the ETDRK4 weights for `z = L dt`.
fn etd_weights(z: Complex64) -> [Complex64; 4] {
    const POINTS: usize = 32;
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    for p in 0..POINTS {
        let theta = 2.0 * std::f64::consts::PI * (p as f64 + 0.5) / POINTS as f64;
        let r = z + Complex64::from_polar(1.0, theta);
        let e = r.exp();
        let r3 = r * r * r;
        acc[0] += ((r / 2.0).exp() - 1.0) / r;
        acc[1] += (-4.0 - r + e * (4.0 - 3.0 * r + r * r)) / r3;
        acc[2] += (2.0 + r + e * (r - 2.0)) / r3;
        acc[3] += (-4.0 - 3.0 * r - r * r + e * (4.0 - r)) / r3;
    }
    acc.map(|a| a / POINTS as f64)
}

impl Stepper {
    /// `symbol` is the real multiplier `Lambda` of `u_t = i Lambda u + ...`.
    fn new(scheme: Scheme, dt: f64, symbol: &[f64]) -> Self {
        let lin = |lam: f64| Complex64::new(0.0, lam * dt);
        let full: Vec<Complex64> = symbol.iter().map(|&l| lin(l).exp()).collect();
        let half: Vec<Complex64> = symbol.iter().map(|&l| (lin(l) / 2.0).exp()).collect();
        let (mut q, mut f1, mut f2, mut f3) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        if scheme == Scheme::Etdrk4 {
            for &l in symbol {
                let [a, b, c, d] = etd_weights(lin(l));
                q.push(a * dt);
                f1.push(b * dt);
                f2.push(c * dt);
                f3.push(d * dt);
            }
        }
        Self { scheme, dt, full, half, q, f1, f2, f3 }
    }

    fn step(&self, u: &[Complex64], nonlinear: &dyn Fn(&[Complex64]) -> Vec<Complex64>) -> Vec<Complex64> {
        let dt = self.dt;
        let n = u.len();
        match self.scheme {
            Scheme::Rk4 | Scheme::Ifrk4 => {
                // with a zero symbol the integrating factor is 1 and this is plain RK4
                let k1 = nonlinear(u);
                let a: Vec<Complex64> = (0..n).map(|i| self.half[i] * (u[i] + k1[i] * (dt / 2.0))).collect();
                let k2 = nonlinear(&a);
                let b: Vec<Complex64> = (0..n).map(|i| self.half[i] * u[i] + k2[i] * (dt / 2.0)).collect();
                let k3 = nonlinear(&b);
                let c: Vec<Complex64> = (0..n).map(|i| self.full[i] * u[i] + self.half[i] * k3[i] * dt).collect();
                let k4 = nonlinear(&c);
                (0..n)
                    .map(|i| {
                        self.full[i] * u[i]
                            + (self.full[i] * k1[i] + self.half[i] * (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0)
                    })
                    .collect()
            }
            Scheme::Etdrk4 => {
                let nu = nonlinear(u);
                let a: Vec<Complex64> = (0..n).map(|i| self.half[i] * u[i] + self.q[i] * nu[i]).collect();
                let na = nonlinear(&a);
                let b: Vec<Complex64> = (0..n).map(|i| self.half[i] * u[i] + self.q[i] * na[i]).collect();
                let nb = nonlinear(&b);
                let c: Vec<Complex64> =
                    (0..n).map(|i| self.half[i] * a[i] + self.q[i] * (nb[i] * 2.0 - nu[i])).collect();
                let nc = nonlinear(&c);
                (0..n)
                    .map(|i| {
                        self.full[i] * u[i]
                            + self.f1[i] * nu[i]
                            + self.f2[i] * (na[i] + nb[i]) * 2.0
                            + self.f3[i] * nc[i]
                    })
                    .collect()
            }
        }
    }
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

fn check_drift(p0: f64, p: f64, t: f64) -> Result<()> {
    let scale = if p0 != 0.0 { p0.abs() } else { 1.0 };
    let drift = (p - p0).abs() / scale;
    if drift > DRIFT_LIMIT {
        return Err(Error::Drift { drift, limit: DRIFT_LIMIT, t });
    }
    Ok(())
}

/// `||u_t||` in the order `-1` norm of the half-plane side, i.e. of `p(u)`.
fn limit_dt_norm(p: &HardyFunction) -> f64 {
    sobolev2(p, -1).expect("order -1 is supported").max(0.0).sqrt()
}

/// Integrates `f_t = -i p(f)` with classical RK4, where `p` is the projected cubic term.
pub fn evolve_limit(u0: &HardyFunction, cfg: &IntegratorConfig) -> Result<Trajectory<HardyFunction>> {
    cfg.validate()?;
    if cfg.scheme != Scheme::Rk4 {
        return Err(Error::InvalidInput("the half-plane flow has no linear part; use rk4".into()));
    }
    let grid = u0.grid().clone();
    let kernel = TrilinearKernel::new(&grid);
    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = |f: &[Complex64]| -> Vec<Complex64> { kernel.cubic(f).into_iter().map(|v| v * minus_i).collect() };
    let stepper = Stepper::new(Scheme::Rk4, cfg.dt, &vec![0.0; grid.len()]);

    let mut traj = Trajectory { times: Vec::new(), snapshots: Vec::new(), series: Series::default() };
    let record = |traj: &mut Trajectory<HardyFunction>, t: f64, f: &[Complex64]| {
        let u = HardyFunction::new(grid.clone(), f.to_vec()).expect("finite state");
        let p = HardyFunction::new(grid.clone(), kernel.cubic(f)).expect("finite state");
        traj.series.momentum.push(sobolev2(&u, 1).expect("order 1"));
        traj.series.energy.push(kernel.l4norm4(f));
        traj.series.w_norm.push(0.0);
        traj.series.uplus_norm.push(u.norm());
        traj.series.dt_norm.push(limit_dt_norm(&p));
        traj.series.dist_orbit.push(f64::NAN);
        traj.times.push(t);
        traj.snapshots.push(u);
    };
    let mut state = u0.coeffs().to_vec();
    record(&mut traj, 0.0, &state);
    let p0 = traj.series.momentum[0];
    let n = cfg.n_steps();
    for step in 1..=n {
        state = stepper.step(&state, &rhs);
        let t = step as f64 * cfg.dt;
        if !all_finite(&state) {
            return Err(Error::NonFinite { t });
        }
        if step % cfg.sample_every == 0 || step == n {
            record(&mut traj, t, &state);
            check_drift(p0, *traj.series.momentum.last().unwrap(), t)?;
        }
    }
    Ok(traj)
}

/// Integrates `U_t = i (Lambda U - Pi(|U|^2 U))`, the rescaled truncated
/// Heisenberg flow at speed `gamma` with truncation order `n`.
pub fn evolve_heis(u0: &RadialField, gamma: f64, n: usize, cfg: &IntegratorConfig) -> Result<Trajectory<RadialField>> {
    cfg.validate()?;
    let grid = u0.grid().clone();
    let symbol = linear_symbol_tensor(&grid, gamma)?;
    if truncate(u0, n)? != *u0 {
        return Err(Error::InvalidInput(format!("initial field is not in the range of the order-{n} truncation")));
    }
    let max_symbol = symbol.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if cfg.scheme == Scheme::Rk4 && max_symbol * cfg.dt.abs() > 1.0 {
        return Err(Error::Stiffness { product: max_symbol * cfg.dt.abs() });
    }
    let minus_i = Complex64::new(0.0, -1.0);
    let as_field = |c: &[Complex64]| RadialField::from_coeffs(grid.clone(), c.to_vec()).expect("finite state");
    let nonlinear = |c: &[Complex64]| -> Vec<Complex64> {
        cubic_truncated(&as_field(c), n)
            .expect("order checked above")
            .into_coeffs()
            .into_iter()
            .map(|v| v * minus_i)
            .collect()
    };
    let stepper = match cfg.scheme {
        // plain RK4 treats the linear part explicitly
        Scheme::Rk4 => None,
        s => Some(Stepper::new(s, cfg.dt, &symbol)),
    };
    let explicit = Stepper::new(Scheme::Rk4, cfg.dt, &vec![0.0; symbol.len()]);
    let full_rhs = |c: &[Complex64]| -> Vec<Complex64> {
        let nl = nonlinear(c);
        c.iter().zip(&symbol).zip(nl).map(|((v, l), w)| Complex64::new(0.0, *l) * v + w).collect()
    };

    let mut traj = Trajectory { times: Vec::new(), snapshots: Vec::new(), series: Series::default() };
    let record = |traj: &mut Trajectory<RadialField>, t: f64, c: &[Complex64]| -> Result<()> {
        let u = as_field(c);
        let (plus, w) = split_plus(&u);
        let ut = as_field(&full_rhs(c));
        traj.series.momentum.push(momentum(&u));
        traj.series.energy.push(energy_gamma(&u, gamma)?);
        traj.series.w_norm.push(w.h1_norm());
        traj.series.uplus_norm.push(plus.h1_norm());
        traj.series.dt_norm.push(ut.norm_sq(-1)?.max(0.0).sqrt());
        traj.series.dist_orbit.push(f64::NAN);
        traj.times.push(t);
        traj.snapshots.push(u);
        Ok(())
    };
    let mut state = u0.coeffs().to_vec();
    record(&mut traj, 0.0, &state)?;
    let p0 = traj.series.momentum[0];
    let steps = cfg.n_steps();
    for step in 1..=steps {
        state = match &stepper {
            Some(s) => s.step(&state, &nonlinear),
            None => explicit.step(&state, &full_rhs),
        };
        let t = step as f64 * cfg.dt;
        if !all_finite(&state) {
            return Err(Error::NonFinite { t });
        }
        if step % cfg.sample_every == 0 || step == steps {
            record(&mut traj, t, &state)?;
            check_drift(p0, *traj.series.momentum.last().unwrap(), t)?;
        }
    }
    Ok(traj)
}

/// Per-snapshot ratio `||u_t|| / ||u||^3_{L4}` and its supremum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DtNormReport {
    pub ratios: Vec<f64>,
    pub sup: f64,
}

/// Evaluates `||u_t||` in the order `-1` half-plane norm from the equation
/// and compares it with `||u||^3_{L4}`. Snapshots with vanishing `L4` norm
/// are skipped.
pub fn dt_norm_diagnostic(traj: &Trajectory<HardyFunction>) -> DtNormReport {
    let Some(first) = traj.snapshots.first() else { return DtNormReport::default() };
    let kernel = TrilinearKernel::new(first.grid());
    let mut ratios = Vec::new();
    for u in &traj.snapshots {
        let l4 = kernel.l4norm4(u.coeffs());
        if l4 <= 0.0 {
            continue;
        }
        let p = HardyFunction::new(u.grid().clone(), kernel.cubic(u.coeffs())).expect("finite state");
        ratios.push(limit_dt_norm(&p) / l4.powf(0.75));
    }
    let sup = ratios.iter().cloned().fold(0.0, f64::max);
    DtNormReport { ratios, sup }
}

/// `||u||^4_{L4}` of a snapshot; convenience for callers holding a trajectory.
pub fn limit_energy(u: &HardyFunction) -> f64 {
    l4norm4(u)
}
