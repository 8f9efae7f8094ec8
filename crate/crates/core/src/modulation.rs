//! Distance to the ground-state orbit, the conserved-quantity gap, and
//! piecewise-constant anchoring of trajectories to the orbit.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::hardy::{l4norm4, sobolev2, FrequencyGrid, HardyFunction, SymmetryElement};
use crate::heis::{split_plus, RadialField, Sign};

/// Slack on the anchoring threshold before a re-fit is triggered.
pub const TUBE_SLACK: f64 = 0.1;

/// `f_Q(sigma) = -2i sqrt(pi) e^{-sigma}` for `sigma > 0`, zero otherwise.
pub fn ground_state_value(sigma: f64) -> Complex64 {
    if sigma > 0.0 {
        Complex64::new(0.0, -2.0 * PI.sqrt() * (-sigma).exp())
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Squared order-1 distance `||T_X Q - Q||^2` in closed form.
pub fn gap_closed_form(x: &SymmetryElement) -> f64 {
    let a = x.alpha;
    let num = Complex64::from_polar(1.0 / a, x.theta);
    let den = Complex64::new(1.0 / (a * a) + 1.0, x.s0);
    2.0 * PI - 4.0 * PI * (num / den).re
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// The scale search covers `|log alpha| <= log_alpha_half_range`.
    pub log_alpha_half_range: f64,
    pub alpha_samples: usize,
    /// Zero padding of the translation scan, as a multiple of the grid size.
    pub pad_factor: usize,
    /// Number of local minima of the coarse scale scan that are refined.
    pub starts: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { log_alpha_half_range: 3.0, alpha_samples: 61, pad_factor: 8, starts: 3, tol: 1e-10, max_iterations: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitFit {
    pub distance: f64,
    /// Group element with `T_{x_star} u` closest to `Q`.
    pub x_star: SymmetryElement,
    pub converged: bool,
    pub evaluations: usize,
}

impl OrbitFit {
    /// The orbit point nearest to `u`: `u ~ T_X Q` for the returned `X`.
    pub fn anchor(&self) -> SymmetryElement {
        self.x_star.inverse()
    }
}

/// Golden-section minimization on `[a, b]`.
fn golden(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> (f64, f64, bool) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        if (b - a).abs() <= tol * (1.0 + c.abs()) {
            return if fc < fd { (c, fc, true) } else { (d, fd, true) };
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc, false)
    } else {
        (d, fd, false)
    }
}

/// `min_X ||u - T_X P||^2` over a uniform frequency lattice with quadrature
/// weights `weights`, for a reference profile `P`.
struct OrbitProblem<'a, P: Fn(f64) -> Complex64> {
    sigma0: f64,
    step: f64,
    weights: &'a [f64],
    data: &'a [Complex64],
    norm2: f64,
    profile: P,
    scan: Arc<dyn Fft<f64>>,
    opts: &'a FitOptions,
    evaluations: usize,
}

struct ScaleOptimum {
    value: f64,
    s: f64,
    overlap: Complex64,
}

impl<'a, P: Fn(f64) -> Complex64> OrbitProblem<'a, P> {
    fn new(sigma0: f64, step: f64, weights: &'a [f64], data: &'a [Complex64], profile: P, opts: &'a FitOptions) -> Self {
        let norm2 = data.iter().zip(weights).map(|(v, w)| w * v.norm_sqr()).sum();
        let len = (opts.pad_factor.max(1) * data.len()).next_power_of_two();
        let scan = FftPlanner::new().plan_fft_inverse(len);
        Self { sigma0, step, weights, data, norm2, profile, scan, opts, evaluations: 0 }
    }

    /// Weighted products `w_j u_j conj(T_{(0,0,alpha)}P)_j` and `||T P||^2`.
    fn amplitudes(&self, alpha: f64) -> (Vec<Complex64>, f64) {
        let mut ref2 = 0.0;
        let a = (0..self.data.len())
            .map(|j| {
                let sigma = self.sigma0 + j as f64 * self.step;
                let p = (self.profile)(sigma / (alpha * alpha)) / alpha;
                ref2 += self.weights[j] * p.norm_sqr();
                self.data[j] * p.conj() * self.weights[j]
            })
            .collect();
        (a, ref2)
    }

    /// `sum_j a_j e^{i s sigma_j}`.
    fn overlap(&self, a: &[Complex64], s: f64) -> Complex64 {
        let rot = Complex64::from_polar(1.0, s * self.step);
        let mut phase = Complex64::from_polar(1.0, s * self.sigma0);
        let mut acc = Complex64::new(0.0, 0.0);
        for v in a {
            acc += v * phase;
            phase *= rot;
        }
        acc
    }

    /// Best translation and phase at fixed scale.
    fn at_scale(&mut self, alpha: f64) -> ScaleOptimum {
        self.evaluations += 1;
        let (a, ref2) = self.amplitudes(alpha);
        let len = self.scan.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        buf[..a.len()].copy_from_slice(&a);
        self.scan.process(&mut buf);
        let (k, _) = buf
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (k, v)| if v.norm() > best.1 { (k, v.norm()) } else { best });
        let ds = 2.0 * PI / (len as f64 * self.step);
        let s_k = if k <= len / 2 { k as f64 * ds } else { (k as f64 - len as f64) * ds };
        let (s, _, _) = golden(|s| -self.overlap(&a, s).norm(), s_k - ds, s_k + ds, self.opts.tol, self.opts.max_iterations);
        let overlap = self.overlap(&a, s);
        ScaleOptimum { value: (self.norm2 + ref2 - 2.0 * overlap.norm()).max(0.0), s, overlap }
    }

    fn at_identity(&self) -> f64 {
        let (a, ref2) = self.amplitudes(1.0);
        (self.norm2 + ref2 - 2.0 * self.overlap(&a, 0.0).re).max(0.0)
    }

    fn solve(mut self) -> OrbitFit {
        let opts = self.opts;
        let range = opts.log_alpha_half_range;
        let n = opts.alpha_samples.max(3);
        let grid: Vec<f64> = (0..n).map(|i| -range + 2.0 * range * i as f64 / (n - 1) as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&la| self.at_scale(la.exp()).value).collect();
        let mut minima: Vec<usize> = (0..n)
            .filter(|&i| (i == 0 || values[i] <= values[i - 1]) && (i == n - 1 || values[i] <= values[i + 1]))
            .collect();
        minima.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        minima.truncate(opts.starts.max(1));

        let mut best: Option<(f64, f64, bool)> = None;
        for &i in &minima {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(n - 1)];
            let (la, v, ok) = golden(|la| self.at_scale(la.exp()).value, lo, hi, opts.tol, opts.max_iterations);
            if best.is_none_or(|b| v < b.1) {
                best = Some((la, v, ok));
            }
        }
        let (la, _, ok) = best.expect("at least one start");
        let alpha = la.exp();
        let opt = self.at_scale(alpha);
        let spacing = 2.0 * range / (n - 1) as f64;
        let converged = ok && la.abs() < range - 0.5 * spacing;

        let identity = self.at_identity();
        if identity <= opt.value {
            return OrbitFit {
                distance: identity.sqrt(),
                x_star: SymmetryElement::IDENTITY,
                converged,
                evaluations: self.evaluations,
            };
        }
        let anchor = SymmetryElement::new(opt.s, opt.overlap.arg(), alpha);
        OrbitFit { distance: opt.value.sqrt(), x_star: anchor.inverse(), converged, evaluations: self.evaluations }
    }
}

/// `d(u, M)` in the order-1 norm, with the exact ground-state profile.
pub fn distance_to_orbit(u: &HardyFunction) -> OrbitFit {
    distance_to_orbit_with(u, ground_state_value, &FitOptions::default())
}

/// Orbit distance to the symmetry orbit of an arbitrary reference profile.
pub fn distance_to_orbit_with(u: &HardyFunction, profile: impl Fn(f64) -> Complex64, opts: &FitOptions) -> OrbitFit {
    let g = u.grid();
    let weights: Vec<f64> = g.weights().iter().map(|w| 0.5 * w).collect();
    OrbitProblem::new(g.sigma_min(), g.step(), &weights, u.coeffs(), profile, opts).solve()
}

/// Reference profile from samples, continued to zero frequency.
pub fn sampled_profile(reference: &HardyFunction) -> impl Fn(f64) -> Complex64 + '_ {
    move |s| reference.interpolate_to_origin(s)
}

/// `T_X P` sampled on a grid.
pub fn orbit_point(grid: &FrequencyGrid, profile: impl Fn(f64) -> Complex64, x: &SymmetryElement) -> HardyFunction {
    HardyFunction::from_fn(grid.clone(), |s| {
        Complex64::from_polar(1.0 / x.alpha, x.theta - x.s0 * s) * profile(s / (x.alpha * x.alpha))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialOrbitFit {
    /// Fit of the lowest positive block, distance in the order-1 radial norm.
    pub plus: OrbitFit,
    /// `||W||` of the remaining blocks.
    pub w_norm: f64,
    /// `sqrt(plus.distance^2 + w_norm^2)`.
    pub distance: f64,
}

/// Orbit distance of a radial field in the order-1 norm; the group acts on
/// the lowest positive block only, the remainder counts in full.
pub fn distance_to_orbit_radial(u: &RadialField, profile: impl Fn(f64) -> Complex64, opts: &FitOptions) -> RadialOrbitFit {
    let g = u.grid();
    let weights: Vec<f64> = (0..g.n_freq()).map(|j| g.sigma(Sign::Plus, j) * g.measure(j)).collect();
    let plus = OrbitProblem::new(g.sigma(Sign::Plus, 0), g.sigma_step(), &weights, u.slab(0, Sign::Plus), profile, opts)
        .solve();
    let w_norm = split_plus(u).1.h1_norm();
    RadialOrbitFit { plus, w_norm, distance: plus.distance.hypot(w_norm) }
}

/// `||u - T_X P||` on a radial field, the group acting on the lowest positive block.
pub fn radial_gap(u: &RadialField, profile: impl Fn(f64) -> Complex64, x: &SymmetryElement) -> f64 {
    let g = u.grid();
    let mut target = RadialField::zeros(g.clone());
    for j in 0..g.n_freq() {
        let s = g.sigma(Sign::Plus, j);
        target.set(0, Sign::Plus, j, Complex64::from_polar(1.0 / x.alpha, x.theta - x.s0 * s) * profile(s / (x.alpha * x.alpha)));
    }
    u.sub(&target).h1_norm()
}

/// Values of the conserved pair `(P, E)` against which the gap is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedReference {
    pub momentum: f64,
    pub energy: f64,
}

impl ConservedReference {
    /// The continuum values `P(Q) = E(Q) = pi`.
    pub const EXACT: Self = Self { momentum: PI, energy: PI };

    /// The values of a given function, typically the sampled ground state.
    pub fn of(u: &HardyFunction) -> Self {
        Self { momentum: sobolev2(u, 1).expect("order 1"), energy: l4norm4(u) }
    }
}

/// `|P(u) - pi| + |E(u) - pi|`.
pub fn delta_functional(u: &HardyFunction) -> f64 {
    delta_against(u, &ConservedReference::EXACT)
}

pub fn delta_against(u: &HardyFunction, reference: &ConservedReference) -> f64 {
    let p = sobolev2(u, 1).expect("order 1");
    (p - reference.momentum).abs() + (l4norm4(u) - reference.energy).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub grid: FrequencyGrid,
    /// Frequency window holding the random bumps.
    pub band: (f64, f64),
    pub bumps: usize,
    pub fit: FitOptions,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { grid: FrequencyGrid::standard(), band: (0.05, 6.0), bumps: 3, fit: FitOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub r: f64,
    /// Empirical sup of `d^2 / delta`.
    pub sup_ratio: f64,
    pub mean_ratio: f64,
    pub used: usize,
    /// Samples with `delta <= 1e-8`.
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub samples: usize,
    pub seed: u64,
}

impl StabilityReport {
    pub fn sup(&self) -> f64 {
        self.rows.iter().map(|r| r.sup_ratio).fold(0.0, f64::max)
    }
}

fn smooth_bump(sigma: f64, center: f64, width: f64) -> f64 {
    let x = (sigma - center) / width;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Real Gram-Schmidt in the order-1 inner product; drops dependent vectors.
fn orthonormalize(vectors: Vec<HardyFunction>) -> Vec<HardyFunction> {
    let mut basis: Vec<HardyFunction> = Vec::new();
    for mut v in vectors {
        for b in &basis {
            let c = v.inner(b).re;
            v = v.axpy(Complex64::new(-c, 0.0), b);
        }
        let n = v.norm();
        if n > 1e-12 {
            basis.push(v.scale(Complex64::new(1.0 / n, 0.0)));
        }
    }
    basis
}

/// Unit directions mixing the orbit tangents at `Q` with band-limited
/// bumps orthogonal to them. Drawn sequentially, so a longer list extends a
/// shorter one with the same seed.
pub fn perturbation_directions(opts: &StabilityOptions, samples: usize, seed: u64) -> Vec<HardyFunction> {
    let g = &opts.grid;
    let q = HardyFunction::from_fn(g.clone(), ground_state_value);
    let i = Complex64::i();
    let tangents = orthonormalize(vec![
        q.scale(i),
        q.map(|s, v| -i * s * v),
        q.map(|s, v| v * (2.0 * s - 1.0)),
    ]);
    let (lo, hi) = opts.band;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let parts: Vec<(f64, f64, Complex64)> = (0..opts.bumps)
                .map(|_| {
                    let width = rng.gen_range(0.1..0.4) * (hi - lo);
                    let center = rng.gen_range(lo + width..=hi - width);
                    (center, width, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                })
                .collect();
            let raw = HardyFunction::from_fn(g.clone(), |s| parts.iter().map(|&(m, w, a)| a * smooth_bump(s, m, w)).sum());
            let mut mixed = tangents.clone();
            mixed.push(raw);
            let orth = orthonormalize(mixed).pop().expect("bump independent of tangents");
            let coeffs: Vec<f64> = (0..tangents.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut tangent = HardyFunction::zeros(g.clone());
            for (t, c) in tangents.iter().zip(&coeffs) {
                tangent = tangent.axpy(Complex64::new(*c, 0.0), t);
            }
            let tn = tangent.norm();
            let tangent = tangent.scale(Complex64::new(1.0 / tn, 0.0));
            let mix: f64 = rng.gen_range(0.0..1.0);
            let dir = tangent.scale(Complex64::new(mix, 0.0)).axpy(Complex64::new(1.0 - mix, 0.0), &orth);
            let dn = dir.norm();
            dir.scale(Complex64::new(1.0 / dn, 0.0))
        })
        .collect()
}

/// Empirical sup of `d(u, M)^2 / delta(u)` over `u = Q + p`, `||p|| = r`.
/// The gap is measured against the sampled ground state's own `(P, E)` so
/// that the grid floor does not enter `delta`.
pub fn stability_ratio_experiment(
    opts: &StabilityOptions,
    r_values: &[f64],
    samples: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if r_values.is_empty() || samples == 0 {
        return Err(Error::InvalidInput("need at least one radius and one sample".into()));
    }
    if let Some(r) = r_values.iter().find(|r| !(**r > 0.0 && **r <= 0.3)) {
        return Err(Error::InvalidInput(format!("perturbation radius {r} outside (0, 0.3]")));
    }
    let q = HardyFunction::from_fn(opts.grid.clone(), ground_state_value);
    let reference = ConservedReference::of(&q);
    let dirs = perturbation_directions(opts, samples, seed);
    let rows = r_values
        .iter()
        .map(|&r| {
            let ratios: Vec<Option<f64>> = dirs
                .par_iter()
                .map(|d| {
                    let u = q.axpy(Complex64::new(r, 0.0), d);
                    let delta = delta_against(&u, &reference);
                    if delta <= 1e-8 {
                        return None;
                    }
                    let fit = distance_to_orbit_with(&u, ground_state_value, &opts.fit);
                    Some(fit.distance * fit.distance / delta)
                })
                .collect();
            let used: Vec<f64> = ratios.iter().flatten().copied().collect();
            StabilityRow {
                r,
                sup_ratio: used.iter().copied().fold(0.0, f64::max),
                mean_ratio: if used.is_empty() { 0.0 } else { used.iter().sum::<f64>() / used.len() as f64 },
                used: used.len(),
                excluded: ratios.len() - used.len(),
            }
        })
        .collect();
    Ok(StabilityReport { rows, samples, seed })
}

/// Piecewise-constant orbit anchors along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationTrack {
    /// Anchor in force at each snapshot: `u(t) ~ T_X Q`.
    pub anchors: Vec<SymmetryElement>,
    pub anchor_ids: Vec<usize>,
    /// `|X^{k-1} (X^k)^{-1}|` for consecutive anchors.
    pub anchor_gaps: Vec<f64>,
    /// `||u(t) - T_X Q||` with the anchor in force.
    pub anchor_distance: Vec<f64>,
}

impl ModulationTrack {
    pub fn max_anchor_gap(&self) -> f64 {
        self.anchor_gaps.iter().copied().fold(0.0, f64::max)
    }
}

fn track<S: Sync>(
    snapshots: &[S],
    threshold_r: f64,
    gap: impl Fn(&S, &SymmetryElement) -> f64,
    fit: impl Fn(&S) -> (f64, SymmetryElement) + Sync,
    times: &[f64],
) -> Result<(ModulationTrack, Vec<f64>)> {
    if !(threshold_r > 0.0) {
        return Err(Error::InvalidInput(format!("tube radius must be positive, got {threshold_r}")));
    }
    let limit = 2.0 * threshold_r;
    let mut out = ModulationTrack { anchors: Vec::new(), anchor_ids: Vec::new(), anchor_gaps: Vec::new(), anchor_distance: Vec::new() };
    let mut current: Option<SymmetryElement> = None;
    let mut id = 0;
    for (k, u) in snapshots.iter().enumerate() {
        let kept = current.map(|x| (x, gap(u, &x))).filter(|(_, d)| *d <= (1.0 + TUBE_SLACK) * threshold_r);
        let (x, d) = match kept {
            Some(pair) => pair,
            None => {
                let (distance, x) = fit(u);
                if distance > limit {
                    return Err(Error::TubeExit { t: times[k], distance, limit });
                }
                if let Some(prev) = current {
                    out.anchor_gaps.push(prev.compose(&x.inverse()).size());
                    id += 1;
                }
                current = Some(x);
                (x, gap(u, &x))
            }
        };
        out.anchors.push(x);
        out.anchor_ids.push(id);
        out.anchor_distance.push(d);
    }
    let distances = snapshots.par_iter().map(|u| fit(u).0).collect();
    Ok((out, distances))
}

/// Anchors a half-plane trajectory to the ground-state orbit, re-fitting
/// whenever the anchored gap exceeds `(1 + TUBE_SLACK) * threshold_r`, and
/// fills the trajectory's orbit-distance series.
pub fn track_modulation(traj: &mut Trajectory<HardyFunction>, threshold_r: f64, opts: &FitOptions) -> Result<ModulationTrack> {
    let gap = |u: &HardyFunction, x: &SymmetryElement| u.sub(&orbit_point(u.grid(), ground_state_value, x)).norm();
    let fit = |u: &HardyFunction| {
        let f = distance_to_orbit_with(u, ground_state_value, opts);
        (f.distance, f.anchor())
    };
    let (track, distances) = track(&traj.snapshots, threshold_r, gap, fit, &traj.times)?;
    traj.series.dist_orbit = distances;
    Ok(track)
}

/// As [`track_modulation`] for radial fields, against the orbit of `profile`
/// placed in the lowest positive block.
pub fn track_modulation_radial(
    traj: &mut Trajectory<RadialField>,
    profile: impl Fn(f64) -> Complex64 + Sync,
    threshold_r: f64,
    opts: &FitOptions,
) -> Result<ModulationTrack> {
    let gap = |u: &RadialField, x: &SymmetryElement| radial_gap(u, &profile, x);
    let fit = |u: &RadialField| {
        let f = distance_to_orbit_radial(u, &profile, opts);
        (f.distance, f.plus.anchor())
    };
    let (track, distances) = track(&traj.snapshots, threshold_r, gap, fit, &traj.times)?;
    traj.series.dist_orbit = distances;
    Ok(track)
}
