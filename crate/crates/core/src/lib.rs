//! Spectral flows on the Heisenberg group (radial case) and on the upper
//! half-plane, their traveling-wave ground states, and orbital-stability
//! diagnostics.

pub mod error;
pub mod evolution;
pub mod family;
pub mod groundstate;
pub mod hardy;
pub mod heis;
pub mod io;
pub mod modulation;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64;
