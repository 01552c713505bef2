//! Distributed control laws and the auxiliary consensus dynamics.
//!
//! Everything here is a pure function of one agent's local view.

use thiserror::Error;

use crate::plant::{PlantError, PlantSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("control gains must be positive, got c = {c}, c_bar = {c_bar}")]
    InvalidGains { c: f64, c_bar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains<T> {
    /// Consensus gain.
    pub c: T,
    /// Auxiliary-dynamics gain.
    pub c_bar: T,
}

impl<T: Real> ControlGains<T> {
    pub fn new(c: T, c_bar: T) -> Result<Self, ControlError> {
        if !(c > T::zero()) || !(c_bar > T::zero()) {
            return Err(ControlError::InvalidGains { c: c.to_f64_lossy(), c_bar: c_bar.to_f64_lossy() });
        }
        Ok(Self { c, c_bar })
    }
}

/// What agent `i` knows at one instant.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a, T> {
    pub x: T,
    pub x_bar: T,
    pub neighbor_x: &'a [T],
    pub neighbor_x_bar: &'a [T],
    /// GP posterior mean at the agent's own state.
    pub f_hat: T,
}

impl<T: Real> AgentView<'_, T> {
    pub fn tracking_error(&self) -> T {
        self.x - self.x_bar
    }
}

/// `ẋ̄_i = −c̄ Σ_{j∈N_i} (x̄_i − x̄_j)`
pub fn auxiliary_rate<T: Real>(view: &AgentView<'_, T>, gains: &ControlGains<T>) -> T {
    let disagreement: T = view.neighbor_x_bar.iter().map(|&xj| view.x_bar - xj).sum();
    -gains.c_bar * disagreement
}

/// `u = −(h(x) + f̂ + c Σ_j (x_i − x_j)) / g(x)`
pub fn control_conventional<T: Real>(
    view: &AgentView<'_, T>,
    plant: &PlantSpec<T>,
    gains: &ControlGains<T>,
) -> Result<T, PlantError> {
    let gain = plant.checked_gain(view.x)?;
    let r: T = view.neighbor_x.iter().map(|&xj| view.x - xj).sum();
    Ok(-(plant.h.eval(view.x) + view.f_hat + gains.c * r) / gain)
}

/// `u = −(h(x) + f̂ + c r − ẋ̄) / g(x)` with `r = Σ_j (x̃_i − x̃_j) + x̃_i`.
pub fn control_proposed<T: Real>(
    view: &AgentView<'_, T>,
    plant: &PlantSpec<T>,
    gains: &ControlGains<T>,
    x_bar_rate: T,
) -> Result<T, PlantError> {
    let gain = plant.checked_gain(view.x)?;
    let own = view.tracking_error();
    let r: T = view
        .neighbor_x
        .iter()
        .zip(view.neighbor_x_bar)
        .map(|(&xj, &xbj)| own - (xj - xbj))
        .sum::<T>()
        + own;
    Ok(-(plant.h.eval(view.x) + view.f_hat + gains.c * r - x_bar_rate) / gain)
}

/// Ultimate consensus bound `ε = 2 N η̲ / c`.
pub fn epsilon_bound<T: Real>(gains: &ControlGains<T>, n_agents: usize, eta_bar_lower: T) -> T {
    T::lit(2.0) * T::from_usize(n_agents).unwrap() * eta_bar_lower / gains.c
}

/// Whether `[x̄* − ε, x̄* + ε]` lies inside `[lo, hi]`.
pub fn check_domain_containment<T: Real>(domain_lo: T, domain_hi: T, x_bar_star: T, epsilon: T) -> bool {
    x_bar_star - epsilon >= domain_lo && x_bar_star + epsilon <= domain_hi
}
