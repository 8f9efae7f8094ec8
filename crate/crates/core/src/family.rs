//! Initial data for continuation in the speed parameter.

use crate::error::{Error, Result};
use crate::hardy::ground_state_profile;
use crate::heis::{check_speed, embed_hardy, split_plus, RadialField};

/// `U_0^gamma = ((1-gamma)/(1-beta)) U_0 + ((gamma-beta)/(1-beta)) Q`, with `Q`
/// the explicit ground state placed in the lowest positive block. Data
/// already confined to that block are returned unchanged for every `gamma`.
pub fn initial_family(u0: &RadialField, beta: f64, gamma: f64) -> Result<RadialField> {
    check_speed(beta)?;
    check_speed(gamma)?;
    if gamma < beta {
        return Err(Error::InvalidInput(format!("speed {gamma} below the base speed {beta}")));
    }
    if split_plus(u0).1.is_zero() {
        return Ok(u0.clone());
    }
    let grid = u0.grid();
    let q = embed_hardy(&ground_state_profile(&grid.hardy_grid()), grid);
    let h = 1.0 - beta;
    Ok(u0.scale_real((1.0 - gamma) / h).add(&q.scale_real((gamma - beta) / h)))
}
