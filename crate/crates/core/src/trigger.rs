//! Decentralized trigger functions. Each one only reads the agent's own
//! error bound, state and auxiliary state; a datapoint is collected when the
//! returned value is strictly positive.

use crate::scalar::Real;

/// Which trigger function an agent runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriggerMode {
    Proposed,
    Naive,
    Relaxed,
    None,
}

/// One evaluated trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerDecision<T> {
    pub rho_value: T,
    pub fired: bool,
    pub eta_at_state: T,
    pub mode: TriggerMode,
}

/// Local quantities a trigger may depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerInputs<T> {
    pub eta: T,
    pub x: T,
    pub x_bar: T,
    pub c: T,
    pub n_agents: usize,
    pub eta_bar_lower: T,
    /// Only read by the relaxed trigger.
    pub epsilon: T,
}

/// `ρ = η − max{ c|x − x̄| − √(N−1) η̲, η̲ }`
pub fn rho_proposed<T: Real>(eta: T, x: T, x_bar: T, c: T, n_agents: usize, eta_bar_lower: T) -> T {
    let sqrt_others = T::from_usize(n_agents.saturating_sub(1)).unwrap().sqrt();
    let tracking = c * (x - x_bar).abs() - sqrt_others * eta_bar_lower;
    eta - tracking.max(eta_bar_lower)
}

/// `ρ = η − η̲`
pub fn rho_naive<T: Real>(eta: T, eta_bar_lower: T) -> T {
    eta - eta_bar_lower
}

/// `ρ = η − ( c⁻¹ max{|x − x̄| − ε/√N, 0} + η̲ )`
pub fn rho_relaxed<T: Real>(
    eta: T,
    x: T,
    x_bar: T,
    c: T,
    n_agents: usize,
    eta_bar_lower: T,
    epsilon: T,
) -> T {
    let sqrt_n = T::from_usize(n_agents).unwrap().sqrt();
    let excess = ((x - x_bar).abs() - epsilon / sqrt_n).max(T::zero());
    eta - (excess / c + eta_bar_lower)
}

impl<T: Real> TriggerInputs<T> {
    pub fn rho(&self, mode: TriggerMode) -> T {
        match mode {
            TriggerMode::Proposed => {
                rho_proposed(self.eta, self.x, self.x_bar, self.c, self.n_agents, self.eta_bar_lower)
            }
            TriggerMode::Naive => rho_naive(self.eta, self.eta_bar_lower),
            TriggerMode::Relaxed => rho_relaxed(
                self.eta,
                self.x,
                self.x_bar,
                self.c,
                self.n_agents,
                self.eta_bar_lower,
                self.epsilon,
            ),
            TriggerMode::None => T::nan(),
        }
    }

    /// Evaluates the trigger; fires on strictly positive `ρ` only.
    pub fn decide(&self, mode: TriggerMode) -> TriggerDecision<T> {
        let rho_value = self.rho(mode);
        TriggerDecision { rho_value, fired: rho_value > T::zero(), eta_at_state: self.eta, mode }
    }
}

/// Partition used to state the trigger's guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentClass {
    /// Small tracking error: `c|x̃| ≤ (√(N−1) + 1) η̲`.
    S1,
    /// Large tracking error, trigger fired.
    S2,
    /// Large tracking error, trigger silent.
    S3,
}

pub fn classify_agent<T: Real>(
    eta: T,
    x: T,
    x_bar: T,
    c: T,
    n_agents: usize,
    eta_bar_lower: T,
) -> AgentClass {
    let sqrt_others = T::from_usize(n_agents.saturating_sub(1)).unwrap().sqrt();
    if c * (x - x_bar).abs() <= (sqrt_others + T::one()) * eta_bar_lower {
        AgentClass::S1
    } else if rho_proposed(eta, x, x_bar, c, n_agents, eta_bar_lower) > T::zero() {
        AgentClass::S2
    } else {
        AgentClass::S3
    }
}
