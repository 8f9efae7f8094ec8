use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform frequency lattice `sigma_j = sigma_min + j*h` on `[sigma_min, sigma_max]`
/// with trapezoidal weights.
///
/// Uniformity matters: the cubic kernel pairs frequencies through
/// `sigma_i + sigma_k = sigma_j + sigma_l`, which only stays on-grid for a
/// lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    sigma_min: f64,
    sigma_max: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(sigma_min: f64, sigma_max: f64, n_points: usize) -> Result<Self> {
        if !(sigma_min.is_finite() && sigma_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if sigma_min <= 0.0 {
            return Err(Error::InvalidGrid(format!("sigma_min must be positive, got {sigma_min}")));
        }
        if sigma_max <= sigma_min {
            return Err(Error::InvalidGrid(format!(
                "sigma_max ({sigma_max}) must exceed sigma_min ({sigma_min})"
            )));
        }
        if n_points < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 nodes, got {n_points}")));
        }
        Ok(Self { sigma_min, sigma_max, n_points })
    }

    /// `[1e-3, 30]` with 1024 nodes.
    pub fn standard() -> Self {
        Self { sigma_min: 1e-3, sigma_max: 30.0, n_points: 1024 }
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.sigma_max - self.sigma_min) / (self.n_points - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.sigma_min + j as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Trapezoid end factor: 1/2 at both ends, 1 inside.
    pub fn end_factor(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n_points {
            0.5
        } else {
            1.0
        }
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.step() * self.end_factor(j)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.weight(j)).collect()
    }

    /// Same interval with the step halved.
    pub fn refined(&self) -> Self {
        Self { n_points: 2 * self.n_points - 1, ..self.clone() }
    }

    pub fn contains(&self, sigma: f64) -> bool {
        sigma >= self.sigma_min && sigma <= self.sigma_max
    }
}
