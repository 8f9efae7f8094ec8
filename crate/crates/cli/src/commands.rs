use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use heisflow_core::evolution::{dt_norm_diagnostic, evolve_heis, evolve_limit, IntegratorConfig, Scheme, Trajectory};
use heisflow_core::family::initial_family;
use heisflow_core::groundstate::{
    continuation_sweep_profiles, solve_ground_state_with, solve_limit_profile, GroundState, SolverOptions, SweepResult,
};
use heisflow_core::hardy::{
    bergman_project_bruteforce, cubic_projection, cubic_projection_direct, ground_state_profile, l4norm4, l4norm4_direct,
    FrequencyGrid, HardyFunction,
};
use heisflow_core::heis::{
    check_speed, cubic_truncated, embed_hardy, extract_hardy, l2norm2_collocation, RadialField, RadialGridSpec,
    RadialSpectralGrid,
};
use heisflow_core::io::{read_hardy, read_radial, write_atomic, write_groundstates, write_hardy, write_radial, write_series};
use heisflow_core::modulation::{
    distance_to_orbit_radial, distance_to_orbit_with, ground_state_value, perturbation_directions, sampled_profile,
    stability_ratio_experiment, track_modulation, track_modulation_radial, FitOptions, ModulationTrack, StabilityOptions,
};
use heisflow_core::Complex64;
use rayon::prelude::*;

use crate::config::{ConfigError, RunConfig};
use crate::manifest::Recorder;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Numerical { stage: String, source: heisflow_core::Error },
}

type Outcome<T> = std::result::Result<T, Failure>;

fn invalid(e: heisflow_core::Error) -> Failure {
    Failure::Config(ConfigError::Invalid(e.to_string()))
}

fn at(stage: &str) -> impl Fn(heisflow_core::Error) -> Failure + '_ {
    move |source| Failure::Numerical { stage: stage.to_string(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Groundstate,
    EvolveLimit,
    EvolveHeis,
    Distance,
    StabilitySweep,
    RateStudy,
    OracleCheck,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Self::Groundstate => "groundstate",
            Self::EvolveLimit => "evolve-limit",
            Self::EvolveHeis => "evolve-heis",
            Self::Distance => "distance",
            Self::StabilitySweep => "stability-sweep",
            Self::RateStudy => "rate-study",
            Self::OracleCheck => "oracle-check",
        }
    }
}

/// Validates the whole config for `cmd`, then runs it.
pub fn run(cmd: Subcommand, cfg: &RunConfig, rec: &mut Recorder) -> Outcome<()> {
    rec.derived("h1_norm_factor_heis_over_hardy", PI);
    match cmd {
        Subcommand::Groundstate => GroundstatePlan::new(cfg)?.run(rec),
        Subcommand::EvolveLimit => EvolveLimitPlan::new(cfg)?.run(rec),
        Subcommand::EvolveHeis => EvolveHeisPlan::new(cfg)?.run(rec),
        Subcommand::Distance => DistancePlan::new(cfg)?.run(rec),
        Subcommand::StabilitySweep => StabilityPlan::new(cfg)?.run(rec),
        Subcommand::RateStudy => RatePlan::new(cfg)?.run(rec),
        Subcommand::OracleCheck => OraclePlan::new(cfg)?.run(rec),
    }
}

// ---- shared config readers ----

fn hardy_grid(cfg: &RunConfig) -> Outcome<FrequencyGrid> {
    FrequencyGrid::new(cfg.f64("hardy.sigma_min")?, cfg.f64("hardy.sigma_max")?, cfg.usize("hardy.n_points")?).map_err(invalid)
}

fn radial_grid(cfg: &RunConfig) -> Outcome<Arc<RadialSpectralGrid>> {
    let mut spec = match cfg.raw("radial.preset") {
        Some("default") => RadialGridSpec::default(),
        Some("coarse") => RadialGridSpec::coarse(),
        other => return Err(ConfigError::Invalid(format!("radial.preset must be default or coarse, got {other:?}")).into()),
    };
    if let Some(v) = cfg.opt_usize("radial.k_max")? {
        spec.k_max = v;
    }
    if let Some(v) = cfg.opt_f64("radial.sigma_step")? {
        spec.sigma_step = v;
    }
    if let Some(v) = cfg.opt_usize("radial.m_lo")? {
        spec.m_lo = v;
    }
    if let Some(v) = cfg.opt_usize("radial.m_hi")? {
        spec.m_hi = v;
    }
    if let Some(v) = cfg.opt_usize("radial.n_s")? {
        spec.n_s = v;
    }
    if let Some(v) = cfg.opt_usize("radial.points_per_panel")? {
        spec.points_per_panel = v;
    }
    spec.build().map_err(invalid)
}

fn integrator(cfg: &RunConfig, fallback: Scheme) -> Outcome<IntegratorConfig> {
    let scheme = match cfg.raw("time.scheme") {
        Some(s) => s.parse::<Scheme>().map_err(invalid)?,
        None => fallback,
    };
    let ic = IntegratorConfig::new(scheme, cfg.f64("time.dt")?, cfg.f64("time.t_final")?, cfg.usize("time.sample_every")?);
    ic.validate().map_err(invalid)?;
    Ok(ic)
}

fn limit_integrator(cfg: &RunConfig) -> Outcome<IntegratorConfig> {
    let ic = integrator(cfg, Scheme::Rk4)?;
    if ic.scheme != Scheme::Rk4 {
        return Err(ConfigError::Invalid("the half-plane flow only supports time.scheme = rk4".into()).into());
    }
    Ok(ic)
}

fn solver(cfg: &RunConfig) -> Outcome<(usize, SolverOptions)> {
    let opts = SolverOptions { tol: cfg.positive("run.tol")?, max_iter: cfg.usize("run.max_iter")?, ..SolverOptions::default() };
    Ok((cfg.usize("run.n")?, opts))
}

fn speed(beta: f64) -> Outcome<f64> {
    check_speed(beta).map_err(invalid)?;
    Ok(beta)
}

fn increasing_speeds(values: Vec<f64>, key: &str) -> Outcome<Vec<f64>> {
    for &b in &values {
        speed(b)?;
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::Invalid(format!("{key} must be strictly increasing")).into());
    }
    Ok(values)
}

fn radius(cfg: &RunConfig) -> Outcome<f64> {
    let r = cfg.f64("run.r")?;
    if !(0.0..=1.0).contains(&r) {
        return Err(ConfigError::Invalid(format!("run.r must lie in [0, 1], got {r}")).into());
    }
    Ok(r)
}

fn track_threshold(cfg: &RunConfig, r: f64) -> Outcome<f64> {
    match cfg.opt_f64("run.track_r")? {
        Some(t) if t > 0.0 => Ok(t),
        Some(t) => Err(ConfigError::Invalid(format!("run.track_r must be positive, got {t}")).into()),
        None => Ok((2.0 * r).max(0.05)),
    }
}

fn stability_options(grid: &FrequencyGrid) -> StabilityOptions {
    let base = StabilityOptions::default();
    let band = (base.band.0.max(grid.sigma_min()), base.band.1.min(grid.sigma_max()));
    StabilityOptions { grid: grid.clone(), band, ..base }
}

fn check_band(opts: &StabilityOptions) -> Outcome<()> {
    if opts.band.1 - opts.band.0 < 0.5 {
        return Err(ConfigError::Invalid(format!("grid leaves the perturbation band {:?} too narrow", opts.band)).into());
    }
    Ok(())
}

fn label(prefix: &str, x: f64) -> String {
    format!("{prefix}_{x}")
}

fn csv_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> heisflow_core::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| heisflow_core::Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn sup(values: &[f64]) -> f64 {
    values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
}

fn conservation_checks(rec: &mut Recorder, tag: &str, momentum: &[f64], energy: &[f64], tol: f64) {
    let dp = Trajectory::<()>::relative_drift(momentum);
    let de = Trajectory::<()>::relative_drift(energy);
    rec.at_most(format!("{tag}momentum_drift"), dp, "check.drift", tol);
    rec.at_most(format!("{tag}energy_drift"), de, "check.drift", tol);
}

fn solve_speed(grid: &Arc<RadialSpectralGrid>, beta: f64, n: usize, opts: &SolverOptions) -> heisflow_core::Result<GroundState> {
    let limit = solve_limit_profile(grid, n, opts)?;
    solve_ground_state_with(beta, grid, n, &limit.profile, opts)
}

// ---- groundstate ----

struct GroundstatePlan {
    betas: Vec<f64>,
    grid: Arc<RadialSpectralGrid>,
    n: usize,
    opts: SolverOptions,
    residual_tol: f64,
}

impl GroundstatePlan {
    fn new(cfg: &RunConfig) -> Outcome<Self> {
        let (n, opts) = solver(cfg)?;
        Ok(Self {
            betas: increasing_speeds(cfg.list("run.betas")?, "run.betas")?,
            grid: radial_grid(cfg)?,
            n,
            opts,
            residual_tol: cfg.positive("check.residual")?,
        })
    }

    fn run(self, rec: &mut Recorder) -> Outcome<()> {
        let sweep = rec.timed("sweep", || continuation_sweep_profiles(&self.betas, &self.grid, self.n, &self.opts)).map_err(at("sweep"))?;
        write_sweep(rec, &sweep, true).map_err(at("write"))?;
        rec.at_most("limit_residual", sweep.table.limit_residual, "check.residual", self.residual_tol);
        for row in &sweep.table.rows {
            rec.at_most(format!("residual_beta_{}", row.beta), row.residual, "check.residual", self.residual_tol);
        }
        Ok(())
    }
}

fn write_sweep(rec: &mut Recorder, sweep: &SweepResult, snapshots: bool) -> heisflow_core::Result<()> {
    let table = &sweep.table;
    write_groundstates(&rec.artifact(&rec.out.join("groundstates.csv")), table)?;
    if snapshots {
        let dir = rec.out.join("snapshots");
        write_radial(&rec.artifact(&dir.join("limit")), &sweep.limit.profile)?;
        for (row, q) in table.rows.iter().zip(&sweep.profiles) {
            write_radial(&rec.artifact(&dir.join(label("beta", row.beta))), q)?;
        }
    }
    rec.derived("dist_slope", table.dist_slope);
    rec.derived("r_slope", table.r_slope);
    let c3: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.beta, r.bootstrap_constant())).collect();
    rec.derived("empirical_bootstrap_c3", c3);
    let flagged: Vec<f64> = table.rows.iter().filter(|r| r.truncation_flag).map(|r| r.beta).collect();
    if !flagged.is_empty() {
        log::warn!("truncation may dominate at beta = {flagged:?}");
    }
    rec.derived("truncation_flagged_betas", flagged);
    Ok(())
}

// ---- evolve-limit ----

struct EvolveLimitPlan {
    u0: HardyFunction,
    ic: IntegratorConfig,
    track_r: f64,
    drift_tol: f64,
}

fn perturbed_ground_state(cfg: &RunConfig, grid: &FrequencyGrid, r: f64) -> Outcome<HardyFunction> {
    let q = HardyFunction::from_fn(grid.clone(), ground_state_value);
    if r == 0.0 {
        return Ok(q);
    }
    let opts = stability_options(grid);
    check_band(&opts)?;
    let dir = perturbation_directions(&opts, 1, cfg.seed()?).remove(0);
    Ok(q.axpy(Complex64::new(r, 0.0), &dir))
}

impl EvolveLimitPlan {
    fn new(cfg: &RunConfig) -> Outcome<Self> {
        let r = radius(cfg)?;
        let u0 = match cfg.path("run.input") {
            Some(p) => read_hardy(&p).map_err(invalid)?,
            None => perturbed_ground_state(cfg, &hardy_grid(cfg)?, r)?,
        };
        Ok(Self { u0, ic: limit_integrator(cfg)?, track_r: track_threshold(cfg, r)?, drift_tol: cfg.positive("check.drift")? })
    }

    fn run(self, rec: &mut Recorder) -> Outcome<()> {
        let mut traj = rec.timed("evolve", || evolve_limit(&self.u0, &self.ic)).map_err(at("evolve"))?;
        let track = rec.timed("track", || track_modulation(&mut traj, self.track_r, &FitOptions::default()));
        let track = record_tracking(rec, "", track);
        let report = dt_norm_diagnostic(&traj);
        rec.derived("dt_norm_ratio_sup", report.sup);
        rec.derived("sup_dist_orbit", sup(&traj.series.dist_orbit));
        conservation_checks(rec, "", &traj.series.momentum, &traj.series.energy, self.drift_tol);
        let out = rec.out.clone();
        (|| {
            write_series(&rec.artifact(&out.join("series.csv")), &traj.times, &traj.series, track.as_ref())?;
            write_hardy(&rec.artifact(&out.join("snapshots").join("initial.csv")), &traj.snapshots[0])?;
            write_hardy(&rec.artifact(&out.join("snapshots").join("final.csv")), traj.last())
        })()
        .map_err(at("write"))
    }
}

fn record_tracking(rec: &mut Recorder, tag: &str, track: heisflow_core::Result<ModulationTrack>) -> Option<ModulationTrack> {
    match track {
        Ok(t) => {
            rec.holds(format!("{tag}tracking"), true);
            Some(t)
        }
        Err(e) => {
            rec.derived(format!("{tag}tracking_error"), e.to_string());
            rec.holds(format!("{tag}tracking"), false);
            None
        }
    }
}

// ---- evolve-heis ----

struct EvolveHeisPlan {
    grid: Arc<RadialSpectralGrid>,
    beta: f64,
    gammas: Vec<f64>,
    n: usize,
    opts: SolverOptions,
    input: Option<RadialField>,
    r: f64,
    extra: f64,
    ic: IntegratorConfig,
    drift_tol: f64,
}

/// Unit-norm field living outside the lowest positive block.
fn w_direction(grid: &Arc<RadialSpectralGrid>) -> RadialField {
    let d = RadialField::from_fn(grid.clone(), |level, s| match (level, s > 0.0) {
        (0, true) => Complex64::new(0.0, 0.0),
        (0, false) => Complex64::new(0.0, (2.0 * s).exp()),
        (_, true) => Complex64::new((-(s - 1.0).powi(2)).exp() / level as f64, 0.3 * (-s).exp()),
        (_, false) => Complex64::new(0.0, 0.0),
    });
    d.scale_real(1.0 / d.h1_norm())
}

fn plus_bump(grid: &Arc<RadialSpectralGrid>, size: f64) -> RadialField {
    RadialField::from_fn(grid.clone(), |level, s| {
        if level == 0 && s > 0.0 {
            Complex64::new(0.0, size * (-(s - 1.5).powi(2)).exp())
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

impl EvolveHeisPlan {
    fn new(cfg: &RunConfig) -> Outcome<Self> {
        let grid = radial_grid(cfg)?;
        let beta = speed(cfg.f64("run.beta")?)?;
        let gammas = if cfg.is_set("run.gammas") { increasing_speeds(cfg.list("run.gammas")?, "run.gammas")? } else { vec![beta] };
        if let Some(g) = gammas.iter().find(|g| **g < beta) {
            return Err(ConfigError::Invalid(format!("gamma {g} below beta {beta}")).into());
        }
        let input = cfg.path("run.input").map(|p| read_radial(&p)).transpose().map_err(invalid)?;
        if let Some(u) = &input {
            if u.grid().spec() != grid.spec() {
                return Err(ConfigError::Invalid("run.input was written on a different radial grid".into()).into());
            }
        }
        let (n, opts) = solver(cfg)?;
        Ok(Self {
            grid,
            beta,
            gammas,
            n,
            opts,
            input,
            r: radius(cfg)?,
            extra: cfg.f64("run.extra")?,
            ic: integrator(cfg, Scheme::Etdrk4)?,
            drift_tol: cfg.positive("check.drift")?,
        })
    }

    fn run(self, rec: &mut Recorder) -> Outcome<()> {
        let u0 = match self.input.clone() {
            Some(u) => u,
            None => {
                let q = rec.timed("groundstate", || solve_speed(&self.grid, self.beta, self.n, &self.opts)).map_err(at("groundstate"))?;
                rec.derived("groundstate_residual", q.residual);
                q.profile
                    .add(&plus_bump(&self.grid, self.extra))
                    .add(&w_direction(&self.grid).scale_real(self.r * (1.0 - self.beta).sqrt()))
            }
        };
        let runs: Vec<heisflow_core::Result<Trajectory<RadialField>>> = rec.timed("evolve", || {
            self.gammas
                .par_iter()
                .map(|&g| initial_family(&u0, self.beta, g).and_then(|v| evolve_heis(&v, g, self.n, &self.ic)))
                .collect()
        });
        let mut scaled = Vec::new();
        for (&g, run) in self.gammas.iter().zip(runs) {
            let tag = label("gamma", g);
            let traj = run.map_err(at(&tag))?;
            conservation_checks(rec, &format!("{tag}_"), &traj.series.momentum, &traj.series.energy, self.drift_tol);
            scaled.push((g, sup(&traj.series.w_norm) / (1.0 - g).sqrt()));
            let dir = rec.out.join(&tag);
            (|| {
                write_series(&rec.artifact(&dir.join("series.csv")), &traj.times, &traj.series, None)?;
                write_radial(&rec.artifact(&dir.join("final")), traj.last())
            })()
            .map_err(at("write"))?;
        }
        rec.derived("sup_w_over_sqrt_one_minus_gamma", scaled);
        Ok(())
    }
}

// ---- distance ----

enum DistanceInput {
    Hardy(HardyFunction),
    Radial(RadialField),
}

struct DistancePlan {
    input: DistanceInput,
    max_distance: Option<f64>,
}

impl DistancePlan {
    fn new(cfg: &RunConfig) -> Outcome<Self> {
        let input = match cfg.path("run.input") {
            Some(p) if p.is_dir() => DistanceInput::Radial(read_radial(&p).map_err(invalid)?),
            Some(p) => DistanceInput::Hardy(read_hardy(&p).map_err(invalid)?),
            None => DistanceInput::Hardy(perturbed_ground_state(cfg, &hardy_grid(cfg)?, radius(cfg)?)?),
        };
        Ok(Self { input, max_distance: cfg.opt_f64("check.fit_distance")? })
    }

    fn run(self, rec: &mut Recorder) -> Outcome<()> {
        let opts = FitOptions::default();
        let (fit, w_norm) = rec.timed("fit", || match &self.input {
            DistanceInput::Hardy(u) => (distance_to_orbit_with(u, ground_state_value, &opts), 0.0),
            DistanceInput::Radial(u) => {
                let f = distance_to_orbit_radial(u, ground_state_value, &opts);
                (f.plus, f.w_norm)
            }
        });
        let total = fit.distance.hypot(w_norm);
        let x = fit.x_star;
        let row = vec![num(total), num(fit.distance), num(w_norm), num(x.s0), num(x.theta), num(x.alpha), fit.converged.to_string(), fit.evaluations.to_string()];
        let header = ["distance", "plus_distance", "w_norm", "x_s", "x_theta", "x_alpha", "converged", "evaluations"];
        csv_table(&rec.artifact(&rec.out.join("distance.csv")), &header, &[row]).map_err(at("write"))?;
        rec.derived("distance", total);
        rec.holds("fit_converged", fit.converged);
        if let Some(m) = self.max_distance {
            rec.at_most("distance", total, "check.fit_distance", m);
        }
        Ok(())
    }
}

// ---- stability-sweep ----

struct StabilityPlan {
    r: f64,
    samples: usize,
    seed: u64,
    ic: IntegratorConfig,
    track_r: f64,
    multiple: f64,
    mode: StabilityMode,
}

enum StabilityMode {
    Limit(FrequencyGrid),
    Radial { grid: Arc<RadialSpectralGrid>, beta: f64, n: usize, opts: SolverOptions },
}

struct SampleResult {
    sup: f64,
    initial: f64,
    max_gap: f64,
    series: Option<(Vec<f64>, heisflow_core::evolution::Series, Option<ModulationTrack>)>,
    error: Option<String>,
}

impl StabilityPlan {
    fn new(cfg: &RunConfig) -> Outcome<Self> {
        let r = radius(cfg)?;
        if r == 0.0 {
            return Err(ConfigError::Invalid("run.r must be positive for stability-sweep".into()).into());
        }
        let samples = cfg.usize("run.samples")?;
        if samples == 0 {
            return Err(ConfigError::Invalid("run.samples must be at least 1".into()).into());
        }
        let mode = match cfg.opt_f64("run.beta")? {
            None => StabilityMode::Limit(hardy_grid(cfg)?),
            Some(b) => {
                let (n, opts) = solver(cfg)?;
                StabilityMode::Radial { grid: radial_grid(cfg)?, beta: speed(b)?, n, opts }
            }
        };
        let ic = match mode {
            StabilityMode::Limit(_) => limit_integrator(cfg)?,
            StabilityMode::Radial { .. } => integrator(cfg, Scheme::Etdrk4)?,
        };
        Ok(Self {
            r,
            samples,
            seed: cfg.seed()?,
            ic,
            track_r: track_threshold(cfg, r)?,
            multiple: cfg.positive("check.dist_multiple")?,
            mode,
        })
    }

    fn run(self, rec: &mut Recorder) -> Outcome<()> {
        let fit = FitOptions::default();
        let results: Vec<SampleResult> = match &self.mode {
            StabilityMode::Limit(grid) => {
                let opts = stability_options(grid);
                check_band(&opts)?;
                let q = HardyFunction::from_fn(grid.clone(), ground_state_value);
                let dirs = perturbation_directions(&opts, self.samples, self.seed);
                rec.timed("evolve", || {
                    dirs.par_iter()
                        .map(|d| {
                            let u0 = q.axpy(Complex64::new(self.r, 0.0), d);
                            let run = evolve_limit(&u0, &self.ic)
                                .and_then(|mut t| track_modulation(&mut t, self.track_r, &fit).map(|k| (t, k)));
                            sample_result(run.map(|(t, k)| (t.times, t.series, k)))
                        })
                        .collect()
                })
            }
            StabilityMode::Radial { grid, beta, n, opts } => {
                let q = rec.timed("groundstate", || solve_speed(grid, *beta, *n, opts)).map_err(at("groundstate"))?;
                rec.derived("groundstate_residual", q.residual);
                let qplus = extract_hardy(&q.profile);
                let profile = sampled_profile(&qplus);
                rec.derived("baseline_distance", distance_to_orbit_radial(&q.profile, &profile, &fit).distance);
                let sopts = stability_options(&grid.hardy_grid());
                check_band(&sopts)?;
                let dirs = perturbation_directions(&sopts, self.samples, self.seed);
                rec.timed("evolve", || {
                    dirs.par_iter()
                        .map(|d| {
                            let e = embed_hardy(d, grid);
                            let u0 = q.profile.add(&e.scale_real(self.r / e.h1_norm()));
                            let run = evolve_heis(&u0, *beta, *n, &self.ic).and_then(|mut t| {
                                track_modulation_radial(&mut t, &profile, self.track_r, &fit).map(|k| (t, k))
                            });
                            sample_result(run.map(|(t, k)| (t.times, t.series, k)))
                        })
                        .collect()
                })
            }
        };
        let mut rows = Vec::new();
        for (i, res) in results.iter().enumerate() {
            if let Some((times, series, track)) = &res.series {
                let path = rec.out.join(format!("sample_{i}")).join("series.csv");
                write_series(&rec.artifact(&path), times, series, track.as_ref()).map_err(at("write"))?;
            }
            rows.push(vec![
                i.to_string(),
                num(res.initial),
                num(res.sup),
                num(res.max_gap),
                res.error.clone().unwrap_or_default(),
            ]);
        }
        let header = ["sample", "initial_distance", "sup_distance", "max_anchor_gap", "error"];
        csv_table(&rec.artifact(&rec.out.join("stability.csv")), &header, &rows).map_err(at("write"))?;
        let all_tracked = results.iter().all(|r| r.error.is_none());
        let worst = results.iter().map(|r| r.sup).fold(0.0, f64::max);
        rec.derived("sup_distance", worst);
        rec.derived("empirical_c0", worst / self.r);
        rec.holds("tracking", all_tracked);
        rec.at_most("sup_distance_over_r", worst / self.r, "check.dist_multiple", self.multiple);
        Ok(())
    }
}

fn sample_result(
    run: heisflow_core::Result<(Vec<f64>, heisflow_core::evolution::Series, ModulationTrack)>,
) -> SampleResult {
    match run {
        Ok((times, series, track)) => SampleResult {
            sup: sup(&series.dist_orbit),
            initial: series.dist_orbit.first().copied().unwrap_or(f64::NAN),
            max_gap: track.max_anchor_gap(),
            series: Some((times, series, Some(track))),
            error: None,
        },
        Err(e) => SampleResult { sup: f64::INFINITY, initial: f64::NAN, max_gap: f64::NAN, series: None, error: Some(e.to_string()) },
    }
}

// ---- rate-study ----

struct RatePlan {
    hardy: FrequencyGrid,
    r_values: Vec<f64>,
    samples: usize,
    seed: u64,
    sweep: GroundstatePlan,
    dist_slope_min: f64,
    r_slope_min: f64,
}

impl RatePlan {
    fn new(cfg: &RunConfig) -> Outcome<Self> {
        let sweep = GroundstatePlan::new(cfg)?;
        if sweep.betas.len() < 2 {
            return Err(ConfigError::Invalid("rate-study needs at least two speeds in run.betas".into()).into());
        }
        let r_values = cfg.list("run.r_values")?;
        if let Some(r) = r_values.iter().find(|r| !(**r > 0.0 && **r <= 0.3)) {
            return Err(ConfigError::Invalid(format!("run.r_values entry {r} outside (0, 0.3]")).into());
        }
        let samples = cfg.usize("run.samples")?;
        if samples == 0 {
            return Err(ConfigError::Invalid("run.samples must be at least 1".into()).into());
        }
        let hardy = hardy_grid(cfg)?;
        check_band(&stability_options(&hardy))?;
        Ok(Self {
            hardy,
            r_values,
            samples,
            seed: cfg.seed()?,
            sweep,
            dist_slope_min: cfg.f64("check.dist_slope_min")?,
            r_slope_min: cfg.f64("check.r_slope_min")?,
        })
    }

    fn run(self, rec: &mut Recorder) -> Outcome<()> {
        let opts = stability_options(&self.hardy);
        let report = rec
            .timed("stability_ratio", || stability_ratio_experiment(&opts, &self.r_values, self.samples, self.seed))
            .map_err(at("stability_ratio"))?;
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| vec![num(r.r), num(r.sup_ratio), num(r.mean_ratio), r.used.to_string(), r.excluded.to_string()])
            .collect();
        csv_table(&rec.artifact(&rec.out.join("rates.csv")), &["r", "sup_ratio", "mean_ratio", "used", "excluded"], &rows)
            .map_err(at("write"))?;
        rec.derived("empirical_stability_constant", report.sup());

        let s = &self.sweep;
        let sweep = rec.timed("sweep", || continuation_sweep_profiles(&s.betas, &s.grid, s.n, &s.opts)).map_err(at("sweep"))?;
        write_sweep(rec, &sweep, false).map_err(at("write"))?;
        let slope = |v: Option<f64>| v.unwrap_or(f64::NAN);
        rec.at_least("dist_slope", slope(sweep.table.dist_slope), "check.dist_slope_min", self.dist_slope_min);
        rec.at_least("r_slope", slope(sweep.table.r_slope), "check.r_slope_min", self.r_slope_min);
        Ok(())
    }
}

// ---- oracle-check ----

struct OraclePlan {
    grid: Arc<RadialSpectralGrid>,
    n: usize,
    oracle_tol: f64,
    parseval_tol: f64,
    direct_tol: f64,
}

fn rel_linf(a: &HardyFunction, b: &HardyFunction) -> f64 {
    let scale = b.coeffs().iter().map(|v| v.norm()).fold(0.0, f64::max);
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn two_bumps(grid: &FrequencyGrid) -> HardyFunction {
    HardyFunction::from_fn(grid.clone(), |s| {
        Complex64::new(0.8, 0.3) * (-(s - 1.0).powi(2) / 0.3).exp() + Complex64::new(-0.2, 0.5) * (-(s - 3.0).powi(2)).exp()
    })
}

impl OraclePlan {
    fn new(cfg: &RunConfig) -> Outcome<Self> {
        Ok(Self {
            grid: radial_grid(cfg)?,
            n: cfg.usize("run.n")?,
            oracle_tol: cfg.positive("check.oracle")?,
            parseval_tol: cfg.positive("check.parseval")?,
            direct_tol: cfg.positive("check.direct")?,
        })
    }

    fn run(self, rec: &mut Recorder) -> Outcome<()> {
        let mut table: Vec<(String, f64, f64, &'static str)> = Vec::new();

        let g = FrequencyGrid::new(1e-3, 8.0, 440).map_err(at("oracle_grid"))?;
        let q = ground_state_profile(&g);
        let brute = rec.timed("bruteforce", || bergman_project_bruteforce(&q)).map_err(at("bruteforce"))?;
        table.push(("projection_vs_bruteforce_profile".into(), rel_linf(&cubic_projection(&q), &brute.function), self.oracle_tol, "check.oracle"));
        let bg = FrequencyGrid::new(0.05, 6.0, 64).map_err(at("oracle_grid"))?;
        let u = two_bumps(&bg);
        let brute = rec.timed("bruteforce", || bergman_project_bruteforce(&u)).map_err(at("bruteforce"))?;
        table.push(("projection_vs_bruteforce_bumps".into(), rel_linf(&cubic_projection(&u), &brute.function), self.oracle_tol, "check.oracle"));

        let small = FrequencyGrid::new(0.05, 6.0, 96).map_err(at("oracle_grid"))?;
        let v = two_bumps(&small);
        table.push(("trilinear_direct_vs_fft".into(), rel_linf(&cubic_projection(&v), &cubic_projection_direct(&v)), self.direct_tol, "check.direct"));
        let l4 = (l4norm4(&v) / l4norm4_direct(&v) - 1.0).abs();
        table.push(("l4_direct_vs_fft".into(), l4, self.direct_tol, "check.direct"));

        let grid = &self.grid;
        let field = RadialField::from_fn(grid.clone(), |level, s| {
            let w = (-(s.abs() - 0.5 - 0.2 * level as f64).powi(2)).exp();
            Complex64::new(w * (1.0 + 0.1 * level as f64), w * s.signum() * 0.3)
        });
        let parseval = (l2norm2_collocation(&field) / field.norm_sq(0).map_err(at("parseval"))? - 1.0).abs();
        table.push(("collocation_parseval".into(), parseval, self.parseval_tol, "check.parseval"));

        let lattice = grid.hardy_grid();
        let f = ground_state_profile(&lattice);
        let embedded = embed_hardy(&f, grid);
        let round_trip = extract_hardy(&embedded).sub(&f).coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        rec.holds("embed_extract_round_trip", round_trip == 0.0);
        let heis = rec.timed("cross_model", || cubic_truncated(&embedded, self.n)).map_err(at("cross_model"))?;
        let heis = extract_hardy(&heis);
        // Half-plane reference on a half-shifted refinement, sampled back on the lattice.
        let h = lattice.step();
        let half = FrequencyGrid::new(h / 2.0, lattice.sigma_max() + h / 2.0, 2 * lattice.len() + 1).map_err(at("cross_model"))?;
        let fine = cubic_projection(&ground_state_profile(&half));
        let hardy = HardyFunction::new(lattice.clone(), (0..lattice.len()).map(|j| fine.coeffs()[2 * j + 1]).collect())
            .map_err(at("cross_model"))?;
        let diff = heisflow_core::hardy::sobolev2(&heis.sub(&hardy), -1).map_err(at("cross_model"))?;
        let base = heisflow_core::hardy::sobolev2(&hardy, -1).map_err(at("cross_model"))?;
        table.push(("heis_vs_halfplane_cubic".into(), (diff / base).sqrt(), self.oracle_tol, "check.oracle"));

        let mut rows = Vec::new();
        for (name, value, tol, key) in table {
            let pass = rec.at_most(name.clone(), value, key, tol);
            rows.push(vec![name, num(value), num(tol), pass.to_string()]);
        }
        csv_table(&rec.artifact(&rec.out.join("oracles.csv")), &["check", "value", "tolerance", "pass"], &rows).map_err(at("write"))?;
        Ok(())
    }
}

pub fn output_dir(out: Option<PathBuf>) -> std::result::Result<PathBuf, ConfigError> {
    let out = out.ok_or_else(|| ConfigError::Missing("--out".into()))?;
    std::fs::create_dir_all(&out).map_err(|e| ConfigError::Invalid(format!("cannot create {}: {e}", out.display())))?;
    Ok(out)
}
