//! Text serialization: sampled functions, trajectory series and ground-state tables.
//!
//! Floats are written with 17 significant digits, which round-trips every `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Series;
use crate::groundstate::GroundStateTable;
use crate::hardy::{FrequencyGrid, HardyFunction};
use crate::heis::{RadialField, RadialGridSpec, Sign};
use crate::modulation::ModulationTrack;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse(field: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse(format!("not a number: {field:?}")))
}

/// Writes through a sibling temporary file and renames it into place,
/// creating missing parent directories.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Sidecar next to a sample file: `foo.csv` -> `foo.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn samples_csv(sigma: impl Iterator<Item = f64>, values: &[Complex64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sigma", "re", "im"])?;
    for (s, v) in sigma.zip(values) {
        w.write_record([num(s), num(v.re), num(v.im)])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn read_samples(path: &Path) -> Result<Vec<(f64, Complex64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).collect::<Vec<_>>() != ["sigma", "re", "im"] {
        return Err(Error::Parse(format!("{}: expected header sigma,re,im", path.display())));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!("{}: row with {} fields", path.display(), rec.len())));
            }
            Ok((parse(&rec[0])?, Complex64::new(parse(&rec[1])?, parse(&rec[2])?)))
        })
        .collect()
}

/// Rejects rows whose frequencies are not the nodes of `grid`.
fn check_nodes(rows: &[(f64, Complex64)], n: usize, node: impl Fn(usize) -> f64, step: f64) -> Result<()> {
    if rows.len() != n {
        return Err(Error::NonUniformGrid);
    }
    for (j, (s, _)) in rows.iter().enumerate() {
        if (s - node(j)).abs() > 1e-9 * step {
            return Err(Error::NonUniformGrid);
        }
    }
    Ok(())
}

/// `path` gets the samples, `path` with a `.json` extension the grid.
pub fn write_hardy(path: &Path, u: &HardyFunction) -> Result<()> {
    let g = u.grid();
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(g)?.as_bytes())?;
    write_atomic(path, &samples_csv(g.nodes().into_iter(), u.coeffs())?)
}

pub fn read_hardy(path: &Path) -> Result<HardyFunction> {
    let raw: FrequencyGrid = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let grid = FrequencyGrid::new(raw.sigma_min(), raw.sigma_max(), raw.len())?;
    let rows = read_samples(path)?;
    check_nodes(&rows, grid.len(), |j| grid.node(j), grid.step())?;
    HardyFunction::new(grid, rows.into_iter().map(|r| r.1).collect())
}

/// Grid sidecar of a radial field directory.
pub const RADIAL_GRID_FILE: &str = "grid.json";

fn slab_file(level: usize, sign: Sign) -> String {
    format!("slab_k{level}_{}.csv", sign.label())
}

/// One CSV per `(level, sign)` block plus `grid.json` inside `dir`.
pub fn write_radial(dir: &Path, u: &RadialField) -> Result<()> {
    fs::create_dir_all(dir)?;
    let g = u.grid();
    write_atomic(&dir.join(RADIAL_GRID_FILE), serde_json::to_string_pretty(g.spec())?.as_bytes())?;
    for l in 0..g.n_modes() {
        for sign in Sign::BOTH {
            let sigma = (0..g.n_freq()).map(|j| g.sigma(sign, j));
            write_atomic(&dir.join(slab_file(g.level(l), sign)), &samples_csv(sigma, u.slab(l, sign))?)?;
        }
    }
    Ok(())
}

pub fn read_radial(dir: &Path) -> Result<RadialField> {
    let spec: RadialGridSpec = serde_json::from_str(&fs::read_to_string(dir.join(RADIAL_GRID_FILE))?)?;
    let grid = spec.build()?;
    let mut u = RadialField::zeros(grid.clone());
    for l in 0..grid.n_modes() {
        for sign in Sign::BOTH {
            let rows = read_samples(&dir.join(slab_file(grid.level(l), sign)))?;
            check_nodes(&rows, grid.n_freq(), |j| grid.sigma(sign, j), grid.sigma_step())?;
            for (dst, (_, v)) in u.slab_mut(l, sign).iter_mut().zip(rows) {
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::InvalidInput("non-finite coefficient".into()));
                }
                *dst = v;
            }
        }
    }
    Ok(u)
}

/// One row of `series.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub t: f64,
    pub momentum: f64,
    pub energy: f64,
    pub w_norm: f64,
    pub uplus_norm: f64,
    pub dt_norm: f64,
    pub dist_orbit: f64,
    pub x_s: f64,
    pub x_theta: f64,
    pub x_alpha: f64,
    pub anchor_id: Option<usize>,
}

pub fn series_records(times: &[f64], series: &Series, track: Option<&ModulationTrack>) -> Vec<SeriesRecord> {
    (0..times.len())
        .map(|k| {
            let anchor = track.map(|tr| tr.anchors[k]);
            SeriesRecord {
                t: times[k],
                momentum: series.momentum[k],
                energy: series.energy[k],
                w_norm: series.w_norm[k],
                uplus_norm: series.uplus_norm[k],
                dt_norm: series.dt_norm[k],
                dist_orbit: series.dist_orbit.get(k).copied().unwrap_or(f64::NAN),
                x_s: anchor.map_or(f64::NAN, |x| x.s0),
                x_theta: anchor.map_or(f64::NAN, |x| x.theta),
                x_alpha: anchor.map_or(f64::NAN, |x| x.alpha),
                anchor_id: track.map(|tr| tr.anchor_ids[k]),
            }
        })
        .collect()
}

pub fn write_series(path: &Path, times: &[f64], series: &Series, track: Option<&ModulationTrack>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "t", "momentum", "energy", "w_norm", "uplus_norm", "dt_norm", "dist_orbit", "x_s", "x_theta", "x_alpha", "anchor_id",
    ])?;
    for r in series_records(times, series, track) {
        let id = r.anchor_id.map(|i| i.to_string()).unwrap_or_default();
        w.write_record([
            num(r.t),
            num(r.momentum),
            num(r.energy),
            num(r.w_norm),
            num(r.uplus_norm),
            num(r.dt_norm),
            num(r.dist_orbit),
            num(r.x_s),
            num(r.x_theta),
            num(r.x_alpha),
            id,
        ])?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| parse(&rec[i]);
            Ok(SeriesRecord {
                t: f(0)?,
                momentum: f(1)?,
                energy: f(2)?,
                w_norm: f(3)?,
                uplus_norm: f(4)?,
                dt_norm: f(5)?,
                dist_orbit: f(6)?,
                x_s: f(7)?,
                x_theta: f(8)?,
                x_alpha: f(9)?,
                anchor_id: if rec[10].is_empty() { None } else { Some(rec[10].parse().map_err(|_| Error::Parse(rec[10].to_string()))?) },
            })
        })
        .collect()
}

pub fn write_groundstates(path: &Path, table: &GroundStateTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "beta",
        "residual",
        "iterations",
        "qbeta_norm_h1",
        "dist_to_q",
        "r_beta_norm",
        "delta_qbeta_plus",
        "energy_ratio",
        "bootstrap_c3",
        "edge_fraction",
        "truncation_flag",
    ])?;
    for r in &table.rows {
        w.write_record([
            num(r.beta),
            num(r.residual),
            r.iterations.to_string(),
            num(r.qbeta_norm_h1),
            num(r.dist_to_q),
            num(r.r_beta_norm),
            num(r.delta_qbeta_plus),
            num(r.energy_ratio),
            num(r.bootstrap_constant()),
            num(r.edge_fraction),
            r.truncation_flag.to_string(),
        ])?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
}
