//! Radial functions on the Heisenberg group in Laguerre-mode / frequency variables.

mod collocation;
mod field;
mod grid;
mod ops;

pub use collocation::{cubic_collocation, from_physical, l2norm2_collocation, l4norm4_radial, to_physical, PhysicalField};
pub use field::RadialField;
pub use grid::{laguerre_all, RadialGridSpec, RadialSpectralGrid, Sign};
pub use ops::{
    check_speed, cubic_truncated, embed_hardy, energy_gamma, extract_hardy, linear_symbol, linear_symbol_tensor,
    momentum, quadratic_form, split_plus, truncate,
};
