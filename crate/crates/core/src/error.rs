use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Sobolev order {0} is not supported here")]
    SobolevOrder(i32),
    #[error("point {0} is not in the open upper half-plane")]
    OutsideHalfPlane(Complex64),
    #[error("frequency grid is not uniform")]
    NonUniformGrid,
    #[error("speed must satisfy 0 <= gamma < 1, got {0}")]
    Speed(f64),
    #[error("aliasing: s-box of {n_s} points cannot hold cubic products of band index {m_hi} (need more than {need})")]
    Aliasing { n_s: usize, m_hi: usize, need: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("momentum drift {drift:e} exceeds {limit:e} at t = {t}")]
    Drift { drift: f64, limit: f64, t: f64 },
    #[error("stiffness guard: max|symbol|*dt = {product:.3} requires an exponential scheme")]
    Stiffness { product: f64 },
    #[error("half-plane window captured only {captured:.6} of the L4 mass")]
    OracleWindow { captured: f64 },
    #[error("Petviashvili stabilizer left [0.1, 10]: {value} at iteration {iteration}")]
    Diverged { value: f64, iteration: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Stagnated { iterations: usize, residual: f64 },
    #[error("iteration collapsed to the zero state")]
    CollapsedToZero,
    #[error("trajectory left the modulation tube at t = {t}: distance {distance} > {limit}")]
    TubeExit { t: f64, distance: f64, limit: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
