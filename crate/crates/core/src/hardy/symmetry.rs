use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::{interpolate_cubic_to_origin, HardyFunction};

/// Group element `(s0, theta, alpha)`: translation in `s`, phase and scaling.
///
/// Acting on frequency profiles,
/// `(T_X f)(sigma) = e^{i theta} e^{-i s0 sigma} f(sigma/alpha^2) / alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryElement {
    pub s0: f64,
    pub theta: f64,
    pub alpha: f64,
}

/// Phase reduced to `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

impl SymmetryElement {
    pub const IDENTITY: Self = Self { s0: 0.0, theta: 0.0, alpha: 1.0 };

    pub fn new(s0: f64, theta: f64, alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha.is_finite(), "scale must be positive, got {alpha}");
        Self { s0, theta, alpha }
    }

    pub fn translation(s0: f64) -> Self {
        Self { s0, ..Self::IDENTITY }
    }

    /// `T_{self.compose(other)} = T_self T_other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            s0: self.s0 + other.s0 / (self.alpha * self.alpha),
            theta: wrap_phase(self.theta + other.theta),
            alpha: self.alpha * other.alpha,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            s0: -self.s0 * self.alpha * self.alpha,
            theta: wrap_phase(-self.theta),
            alpha: 1.0 / self.alpha,
        }
    }

    /// `|s0| + |theta| + |log alpha|`, phase taken in `(-pi, pi]`.
    pub fn size(&self) -> f64 {
        self.s0.abs() + wrap_phase(self.theta).abs() + self.alpha.ln().abs()
    }

    /// Multiplier applied to the (dilated) profile at frequency `sigma`.
    fn factor(&self, sigma: f64) -> Complex64 {
        Complex64::from_polar(1.0 / self.alpha, self.theta - self.s0 * sigma)
    }
}

impl Default for SymmetryElement {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Result of [`apply_symmetry_checked`].
#[derive(Clone, Debug)]
pub struct SymmetryImage {
    pub function: HardyFunction,
    /// Fraction of the order-1 mass lost to the support clip.
    pub clipped_fraction: f64,
}

/// `T_X u` on the same grid. Off-grid samples come from cubic interpolation;
/// above the band the profile is zero, below it the first stencil is
/// continued to the origin.
pub fn apply_symmetry_checked(u: &HardyFunction, x: &SymmetryElement) -> SymmetryImage {
    let g = u.grid();
    let a2 = x.alpha * x.alpha;
    let function = if *x == SymmetryElement::IDENTITY {
        u.clone()
    } else if x.alpha == 1.0 {
        u.map(|s, c| c * x.factor(s))
    } else {
        u.map(|s, _| interpolate_cubic_to_origin(g, u.coeffs(), s / a2) * x.factor(s))
    };
    let before = u.inner(u).re;
    let after = function.inner(&function).re;
    let clipped_fraction = if before > 0.0 { ((before - after) / before).max(0.0) } else { 0.0 };
    SymmetryImage { function, clipped_fraction }
}

/// [`apply_symmetry_checked`], warning when more than 1% of the mass is clipped.
pub fn apply_symmetry(u: &HardyFunction, x: &SymmetryElement) -> HardyFunction {
    let img = apply_symmetry_checked(u, x);
    if img.clipped_fraction > 0.01 {
        log::warn!(
            "symmetry {:?} clipped {:.2}% of the mass at the band edges",
            x,
            100.0 * img.clipped_fraction
        );
    }
    img.function
}
