//! Hardy-space functions on the upper half-plane in frequency variables.

mod function;
mod grid;
mod kernel;
mod oracle;
mod symmetry;

pub use function::{ground_state_profile, sobolev2, synthesize, HardyFunction};
pub use grid::FrequencyGrid;
pub use kernel::{cubic_projection, cubic_projection_direct, l4norm4, l4norm4_direct, TrilinearKernel};
pub use oracle::{bergman_project_bruteforce, bergman_project_bruteforce_with, BruteForceOptions, BruteForceProjection};
pub use symmetry::{apply_symmetry, apply_symmetry_checked, wrap_phase, SymmetryElement, SymmetryImage};
