//! Exact Gaussian process regression on scalar inputs with a
//! squared-exponential kernel and zero prior mean.
//!
//! The model keeps a packed Cholesky factor `L` of `K + σ_n² I` together with
//! the whitened targets `z = L⁻¹ y`. Adding a point appends one row to `L`
//! and one entry to `z`, so online updates cost O(M²) and a prediction needs a
//! single forward solve:
//!
//! ```text
//! v  = L⁻¹ k(x)
//! μ  = vᵀ z
//! σ² = κ(0) − vᵀ v
//! ```
//!
//! The probabilistic uniform error bound `η(x) = 2 √β σ(x)` and the
//! quantities it depends on live in [`BoundContext`].

use thiserror::Error;

use crate::linalg::{PackedLower, JITTER_LADDER};
use crate::scalar::Real;

/// Dataset cap used when a configuration does not set one.
pub const DEFAULT_MAX_POINTS: usize = 1000;

/// Safety factor applied to grid-based Lipschitz estimates.
pub const LIPSCHITZ_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dataset is full ({max_points} points)")]
    CapacityExceeded { max_points: usize },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("query {x} outside domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
}

/// Squared-exponential kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<T> {
    pub sigma_f: T,
    pub length_scale: T,
}

impl<T: Real> KernelParams<T> {
    pub fn new(sigma_f: T, length_scale: T) -> Result<Self, GpError> {
        if !(sigma_f > T::zero()) || !(length_scale > T::zero()) {
            return Err(GpError::InvalidParam(format!(
                "kernel needs sigma_f > 0 and length_scale > 0, got {sigma_f} and {length_scale}"
            )));
        }
        Ok(Self { sigma_f, length_scale })
    }

    /// `κ(x, x') = σ_f² exp(−(x − x')² / (2 l²))`
    #[inline]
    pub fn eval(&self, x: T, x2: T) -> T {
        let d = x - x2;
        self.prior_variance() * (-(d * d) / (T::lit(2.0) * self.length_scale * self.length_scale)).exp()
    }

    /// `κ(0) = σ_f²`
    #[inline]
    pub fn prior_variance(&self) -> T {
        self.sigma_f * self.sigma_f
    }
}

pub fn kernel_eval<T: Real>(params: &KernelParams<T>, x: T, x2: T) -> T {
    params.eval(x, x2)
}

/// Posterior mean and standard deviation at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior<T> {
    pub mean: T,
    pub std: T,
}

/// Exact GP with incremental Cholesky factor.
#[derive(Debug, Clone)]
pub struct GpModel<T> {
    kernel: KernelParams<T>,
    noise_std: T,
    inputs: Vec<T>,
    outputs: Vec<T>,
    chol: PackedLower<T>,
    whitened: Vec<T>,
    max_points: usize,
}

impl<T: Real> GpModel<T> {
    pub fn new(kernel: KernelParams<T>, noise_std: T, max_points: usize) -> Result<Self, GpError> {
        if !(noise_std > T::zero()) {
            return Err(GpError::InvalidParam(format!("noise_std must be > 0, got {noise_std}")));
        }
        if max_points == 0 {
            return Err(GpError::InvalidParam("max_points must be positive".into()));
        }
        Ok(Self {
            kernel,
            noise_std,
            inputs: Vec::new(),
            outputs: Vec::new(),
            chol: PackedLower::new(),
            whitened: Vec::new(),
            max_points,
        })
    }

    /// Builds a model by appending `(x, y)` pairs in order.
    pub fn from_data(
        kernel: KernelParams<T>,
        noise_std: T,
        max_points: usize,
        data: impl IntoIterator<Item = (T, T)>,
    ) -> Result<Self, GpError> {
        let mut model = Self::new(kernel, noise_std, max_points)?;
        for (x, y) in data {
            model.add_point(x, y)?;
        }
        Ok(model)
    }

    pub fn kernel(&self) -> &KernelParams<T> {
        &self.kernel
    }

    pub fn noise_std(&self) -> T {
        self.noise_std
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn max_points(&self) -> usize {
        self.max_points
    }

    pub fn inputs(&self) -> &[T] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[T] {
        &self.outputs
    }

    pub fn chol(&self) -> &PackedLower<T> {
        &self.chol
    }

    /// Dense `K + σ_n² I` for the current dataset.
    pub fn gram_matrix(&self) -> Vec<T> {
        let m = self.len();
        let noise_var = self.noise_std * self.noise_std;
        let mut k = vec![T::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                k[i * m + j] = self.kernel.eval(self.inputs[i], self.inputs[j]);
            }
            k[i * m + i] += noise_var;
        }
        k
    }

    fn cross_covariance(&self, x: T) -> Vec<T> {
        self.inputs.iter().map(|&xi| self.kernel.eval(x, xi)).collect()
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn posterior(&self, x: T) -> Result<Posterior<T>, GpError> {
        let prior = self.kernel.prior_variance();
        if self.is_empty() {
            return Ok(Posterior { mean: T::zero(), std: prior.sqrt() });
        }
        let v = self.chol.forward_solve(&self.cross_covariance(x));
        let mean: T = v.iter().zip(&self.whitened).map(|(a, b)| *a * *b).sum();
        let var = prior - v.iter().map(|a| *a * *a).sum::<T>();
        Ok(Posterior { mean, std: clamp_variance(var, prior)?.sqrt() })
    }

    pub fn mean(&self, x: T) -> Result<T, GpError> {
        self.posterior(x).map(|p| p.mean)
    }

    /// Appends one observation, extending the factor by a single row.
    pub fn add_point(&mut self, x: T, y: T) -> Result<(), GpError> {
        if self.len() >= self.max_points {
            return Err(GpError::CapacityExceeded { max_points: self.max_points });
        }
        let noise_var = self.noise_std * self.noise_std;
        let row = self.chol.forward_solve(&self.cross_covariance(x));
        let schur = self.kernel.prior_variance() + noise_var - row.iter().map(|a| *a * *a).sum::<T>();
        let pivot = if schur > T::zero() {
            schur
        } else {
            JITTER_LADDER
                .iter()
                .map(|&j| schur + T::lit(j))
                .find(|d| *d > T::zero())
                .ok_or_else(|| {
                    GpError::NumericalBreakdown(format!(
                        "Cholesky append at x = {x}: Schur complement {schur} not positive after jitter"
                    ))
                })?
        };
        let diag = pivot.sqrt();
        let z = (y - row.iter().zip(&self.whitened).map(|(a, b)| *a * *b).sum::<T>()) / diag;
        self.chol.push_row(&row, diag);
        self.whitened.push(z);
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }
}

fn clamp_variance<T: Real>(var: T, scale: T) -> Result<T, GpError> {
    if var >= T::zero() {
        return Ok(var);
    }
    if -var <= T::variance_clamp_tol(scale) {
        Ok(T::zero())
    } else {
        Err(GpError::NumericalBreakdown(format!("posterior variance {var} is negative")))
    }
}

/// `β = 2 ln( (max 𝕏 − min 𝕏) / (2 δ τ) + 1/δ )`
pub fn compute_beta<T: Real>(delta: T, tau: T, domain_lo: T, domain_hi: T) -> Result<T, GpError> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(GpError::InvalidParam(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(tau > T::zero()) {
        return Err(GpError::InvalidParam(format!("tau must be > 0, got {tau}")));
    }
    if !(domain_hi > domain_lo) {
        return Err(GpError::InvalidParam(format!(
            "empty domain [{domain_lo}, {domain_hi}]"
        )));
    }
    let two = T::lit(2.0);
    let arg = (domain_hi - domain_lo) / (two * delta * tau) + T::one() / delta;
    Ok(two * arg.ln())
}

/// Everything the uniform error bound needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundContext<T> {
    pub delta: T,
    pub tau: T,
    pub beta: T,
    /// `η̲ = 2 √β σ_n`, the bound right after a model update.
    pub eta_bar_lower: T,
    pub lip_f: T,
    pub lip_mu: T,
    pub lip_sigma: T,
    pub domain_lo: T,
    pub domain_hi: T,
}

impl<T: Real> BoundContext<T> {
    /// Builds a context with `β` and `η̲` derived; Lipschitz constants of the
    /// posterior start at zero until [`estimate_lipschitz`] fills them in.
    pub fn new(
        delta: T,
        tau: T,
        domain_lo: T,
        domain_hi: T,
        noise_std: T,
        lip_f: T,
    ) -> Result<Self, GpError> {
        let beta = compute_beta(delta, tau, domain_lo, domain_hi)?;
        if !(noise_std > T::zero()) {
            return Err(GpError::InvalidParam(format!("noise_std must be > 0, got {noise_std}")));
        }
        if !(lip_f >= T::zero()) {
            return Err(GpError::InvalidParam(format!("lip_f must be >= 0, got {lip_f}")));
        }
        Ok(Self {
            delta,
            tau,
            beta,
            eta_bar_lower: T::lit(2.0) * beta.sqrt() * noise_std,
            lip_f,
            lip_mu: T::zero(),
            lip_sigma: T::zero(),
            domain_lo,
            domain_hi,
        })
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.domain_lo && x <= self.domain_hi
    }

    /// `2 √β σ` for a given posterior standard deviation.
    #[inline]
    pub fn eta_from_std(&self, std: T) -> T {
        T::lit(2.0) * self.beta.sqrt() * std
    }

    /// `η(x)` without the domain check; used by the simulator, which tracks
    /// domain exits separately.
    pub fn eta_unchecked(&self, model: &GpModel<T>, x: T) -> Result<T, GpError> {
        Ok(self.eta_from_std(model.posterior(x)?.std))
    }

    /// `γ = (L_f + L_μ + √β L_σ) τ`
    pub fn gamma(&self) -> T {
        (self.lip_f + self.lip_mu + self.beta.sqrt() * self.lip_sigma) * self.tau
    }

    pub fn with_lipschitz(mut self, lip_mu: T, lip_sigma: T) -> Self {
        self.lip_mu = lip_mu;
        self.lip_sigma = lip_sigma;
        self
    }

    fn grid(&self, step: T) -> Result<Vec<T>, GpError> {
        if !(step > T::zero()) {
            return Err(GpError::InvalidParam(format!("grid step must be > 0, got {step}")));
        }
        let span = self.domain_hi - self.domain_lo;
        let n = (span / step).ceil().to_usize().unwrap_or(0).max(1);
        Ok((0..=n)
            .map(|k| {
                let x = self.domain_lo + T::from_usize(k).unwrap() * step;
                if x > self.domain_hi { self.domain_hi } else { x }
            })
            .collect())
    }
}

/// Uniform prediction error bound `η(x) = 2 √β σ(x)` on the domain.
pub fn error_bound<T: Real>(model: &GpModel<T>, ctx: &BoundContext<T>, x: T) -> Result<T, GpError> {
    if !ctx.contains(x) {
        return Err(GpError::OutOfDomain {
            x: x.to_f64_lossy(),
            lo: ctx.domain_lo.to_f64_lossy(),
            hi: ctx.domain_hi.to_f64_lossy(),
        });
    }
    ctx.eta_unchecked(model, x)
}

/// Grid estimate of the Lipschitz constants of the posterior mean and
/// standard deviation over the domain, inflated by [`LIPSCHITZ_SAFETY`].
pub fn estimate_lipschitz<T: Real>(
    ctx: &BoundContext<T>,
    model: &GpModel<T>,
    grid_step: T,
) -> Result<(T, T), GpError> {
    let grid = ctx.grid(grid_step)?;
    let post: Vec<Posterior<T>> = grid.iter().map(|&x| model.posterior(x)).collect::<Result<_, _>>()?;
    let (mut lip_mu, mut lip_sigma) = (T::zero(), T::zero());
    for k in 1..grid.len() {
        let dx = grid[k] - grid[k - 1];
        if dx <= T::zero() {
            continue;
        }
        lip_mu = lip_mu.max(((post[k].mean - post[k - 1].mean) / dx).abs());
        lip_sigma = lip_sigma.max(((post[k].std - post[k - 1].std) / dx).abs());
    }
    let safety = T::lit(LIPSCHITZ_SAFETY);
    Ok((lip_mu * safety, lip_sigma * safety))
}

/// Outcome of the `γ ≤ min √β σ` admissibility check for `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCheck<T> {
    pub gamma: T,
    pub min_scaled_std: T,
}

impl<T: Real> GammaCheck<T> {
    pub fn holds(&self) -> bool {
        self.gamma <= self.min_scaled_std
    }
}

/// Evaluates `γ` from the context and compares it with the grid minimum of
/// `√β σ(x)`.
pub fn check_gamma_condition<T: Real>(
    ctx: &BoundContext<T>,
    model: &GpModel<T>,
    grid_step: T,
) -> Result<GammaCheck<T>, GpError> {
    let sqrt_beta = ctx.beta.sqrt();
    let mut min_scaled_std = T::infinity();
    for x in ctx.grid(grid_step)? {
        min_scaled_std = min_scaled_std.min(sqrt_beta * model.posterior(x)?.std);
    }
    Ok(GammaCheck { gamma: ctx.gamma(), min_scaled_std })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel() -> KernelParams<f64> {
        KernelParams::new(1.0, 0.05).unwrap()
    }

    fn empty() -> GpModel<f64> {
        GpModel::new(kernel(), 0.01, DEFAULT_MAX_POINTS).unwrap()
    }

    fn ctx() -> BoundContext<f64> {
        BoundContext::new(0.01, 1e-3, -1.5, 1.5, 0.01, 10.06).unwrap()
    }

    #[test]
    fn kernel_values() {
        let k = kernel();
        assert_eq!(k.eval(0.4, 0.4), 1.0);
        assert!((k.eval(0.0, 0.05) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((k.eval(0.0, 0.05) - 0.60653).abs() < 1e-5);
        assert!(k.eval(0.0, 10.0) < 1e-300);
        assert_eq!(k.eval(0.1, -0.7), k.eval(-0.7, 0.1));
        assert!(KernelParams::new(0.0, 1.0).is_err());
        assert!(KernelParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn empty_posterior_is_prior() {
        let p = empty().posterior(0.3).unwrap();
        assert_eq!(p, Posterior { mean: 0.0, std: 1.0 });
    }

    #[test]
    fn one_point_posterior_is_analytic() {
        let mut m = empty();
        m.add_point(0.3, 1.7).unwrap();
        let p = m.posterior(0.3).unwrap();
        assert!((p.mean - 1.7 / (1.0 + 1e-4)).abs() < 1e-13);
        let var = 1e-4 / (1.0 + 1e-4);
        assert!((p.std * p.std - var).abs() < 1e-15);
        assert!((p.std - 0.0099995).abs() < 1e-7);
        assert!(p.std <= 0.01);
    }

    #[test]
    fn capacity_is_enforced() {
        let mut m = GpModel::new(kernel(), 0.01, 2).unwrap();
        m.add_point(0.0, 1.0).unwrap();
        m.add_point(0.5, 1.0).unwrap();
        assert_eq!(m.add_point(1.0, 1.0), Err(GpError::CapacityExceeded { max_points: 2 }));
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn duplicate_inputs_stay_factorizable() {
        let mut m = empty();
        for _ in 0..50 {
            m.add_point(0.2, 3.0).unwrap();
        }
        let p = m.posterior(0.2).unwrap();
        assert!((p.mean - 3.0).abs() < 1e-3);
        assert!(p.std < 0.01 / 5.0);
    }

    #[test]
    fn beta_examples() {
        let beta = compute_beta(0.01, 1e-3, -1.5, 1.5).unwrap();
        assert!((beta - 2.0 * 150100f64.ln()).abs() < 1e-12);
        assert!((beta - 23.838).abs() < 1e-3);
        let b_half_tau = compute_beta(0.01, 5e-4, -1.5, 1.5).unwrap();
        assert!(b_half_tau > beta);
        let near_limit = compute_beta(0.999_999, 1e12, -1.5, 1.5).unwrap();
        assert!(near_limit > 0.0 && near_limit < 1e-5);
        assert!(compute_beta(0.0, 1e-3, -1.5, 1.5).is_err());
        assert!(compute_beta(1.0, 1e-3, -1.5, 1.5).is_err());
        assert!(compute_beta(0.5, 0.0, -1.5, 1.5).is_err());
        assert!(compute_beta(0.5, 1.0, 1.5, 1.5).is_err());
    }

    #[test]
    fn error_bound_examples() {
        let c = ctx();
        assert!((c.eta_bar_lower - 0.09765).abs() < 1e-5);
        let mut m = empty();
        let eta0 = error_bound(&m, &c, 0.0).unwrap();
        assert!((eta0 - 2.0 * c.beta.sqrt()).abs() < 1e-12);
        assert!((eta0 - 9.765).abs() < 1e-3);
        m.add_point(0.7, 5.0).unwrap();
        assert!(error_bound(&m, &c, 0.7).unwrap() <= c.eta_bar_lower);
        assert!(matches!(error_bound(&m, &c, 1.6), Err(GpError::OutOfDomain { .. })));
        assert_eq!(c.eta_from_std(0.0), 0.0);
    }

    #[test]
    fn lipschitz_of_flat_mean() {
        let c = ctx();
        let (lip_mu, lip_sigma) = estimate_lipschitz(&c, &empty(), 1e-3).unwrap();
        assert_eq!(lip_mu, 0.0);
        assert_eq!(lip_sigma, 0.0);

        // datapoint far outside the window: mean is numerically flat on it
        let far = GpModel::from_data(kernel(), 0.01, 10, [(40.0, 2.0)]).unwrap();
        let (lip_mu, _) = estimate_lipschitz(&c, &far, 1e-3).unwrap();
        assert!(lip_mu < 1e-6);
    }

    #[test]
    fn gamma_condition_examples() {
        // empty model, sigma == 1 everywhere
        let c = ctx().with_lipschitz(50.0, 1.0);
        assert!(c.gamma() <= 0.1);
        let check = check_gamma_condition(&c, &empty(), 1e-2).unwrap();
        assert!((check.min_scaled_std - c.beta.sqrt()).abs() < 1e-12);
        assert!(check.holds());

        let tiny_tau = BoundContext::new(0.01, 1e-12, -1.5, 1.5, 0.01, 10.06).unwrap();
        let m = GpModel::from_data(kernel(), 0.01, 10, [(0.0, 1.0), (0.5, 2.0)]).unwrap();
        assert!(check_gamma_condition(&tiny_tau, &m, 1e-2).unwrap().holds());

        let huge_tau = BoundContext::new(0.01, 1e3, -1.5, 1.5, 0.01, 10.0).unwrap();
        assert!(!check_gamma_condition(&huge_tau, &empty(), 1e-2).unwrap().holds());
    }

    #[test]
    fn single_precision_model() {
        let k = KernelParams::<f32>::new(1.0, 0.05).unwrap();
        let mut m = GpModel::new(k, 0.01f32, 10).unwrap();
        m.add_point(0.3, 1.7).unwrap();
        let p = m.posterior(0.3).unwrap();
        assert!((p.mean - 1.7).abs() < 1e-3);
        assert!(p.std <= 0.0101);
    }
}
