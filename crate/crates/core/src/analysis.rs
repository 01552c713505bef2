//! Consensus metrics, the two-agent closed-form solution and episode summaries.

use crate::scalar::Real;
use crate::sim::config::{CaseId, SimConfig};

/// `x̄* = N⁻¹ Σ x_i(0)`; `None` for an empty slice.
pub fn average_state<T: Real>(x0: &[T]) -> Option<T> {
    if x0.is_empty() {
        return None;
    }
    Some(x0.iter().copied().sum::<T>() / T::from_usize(x0.len()).unwrap())
}

/// `‖x − 1 x̄*‖₂`
pub fn consensus_error<T: Real>(x: &[T], x_bar_star: T) -> T {
    x.iter().map(|&xi| (xi - x_bar_star) * (xi - x_bar_star)).sum::<T>().sqrt()
}

/// Closed-form trajectory of two agents on one edge under the conventional
/// law with constant residual `eps_bias = f − f̂`:
///
/// ```text
/// x₁,₂(t) = (x₁(0) + x₂(0) + 2 eps_bias t)/2 ± (x₁(0) − x₂(0))/2 · e^{−2ct}
/// ```
pub fn appendix_solution<T: Real>(x0: [T; 2], eps_bias: T, c: T, t: T) -> [T; 2] {
    let two = T::lit(2.0);
    let mean = (x0[0] + x0[1] + two * eps_bias * t) / two;
    let spread = (x0[0] - x0[1]) / two * (-two * c * t).exp();
    [mean + spread, mean - spread]
}

/// Full configuration for one of the four compared cases.
pub fn case_preset(case: CaseId) -> SimConfig {
    SimConfig::for_case(case)
}

/// End-of-episode metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary<T> {
    pub final_error: T,
    pub x_bar_star: T,
    pub epsilon: T,
    pub beta: T,
    pub eta_bar_lower: T,
    pub trigger_counts: Vec<usize>,
    pub max_dataset_sizes: Vec<usize>,
    /// `[x̄* − ε, x̄* + ε] ⊆ 𝕏`
    pub domain_containment: bool,
    /// Every state stayed inside the domain at every step.
    pub stayed_in_domain: bool,
    /// Per-agent `γ ≤ min √β σ` at the end of the episode.
    pub gamma_ok: Vec<bool>,
    /// Largest `|mean(x̄(t)) − mean(x̄(0))|` over all steps.
    pub aux_mean_drift: T,
    /// `‖x̄(T) − 1 x̄*‖`
    pub aux_final_error: T,
    /// Fraction of trigger evaluations where the relaxed and the proposed
    /// trigger disagree on firing.
    pub relaxed_disagreement: f64,
    /// Largest posterior std at a freshly added point, over all triggers.
    pub max_post_update_std: Option<T>,
    pub last_trigger_time: Option<T>,
}

impl<T: Real> EpisodeSummary<T> {
    pub fn gamma_condition_holds(&self) -> bool {
        self.gamma_ok.iter().all(|&ok| ok)
    }

    pub fn total_triggers(&self) -> usize {
        self.trigger_counts.iter().sum()
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
