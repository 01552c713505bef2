//! Agent dynamics `ẋ = h(x) + f(x) + g(x) u` and the measurement model.

use thiserror::Error;

use crate::scalar::Real;

pub const DEFAULT_G_MIN: f64 = 1e-6;

/// Number of points used to validate `|g| ≥ g_min` over the domain.
const GAIN_CHECK_POINTS: usize = 1001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("input gain |g({x})| = {gain} is below g_min = {g_min}")]
    SingularGain { x: f64, gain: f64, g_min: f64 },
    #[error("invalid plant: {0}")]
    Invalid(String),
}

/// Built-in scalar function families a plant can be assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFn<T> {
    Zero,
    Constant(T),
    /// `offset + slope·x`
    Affine { offset: T, slope: T },
    /// `amplitude·sin(frequency·x + phase) + offset`
    Sinusoid { amplitude: T, frequency: T, phase: T, offset: T },
    /// `sin(10x) + 1/(2 e^{−x/10}) + 5`
    Benchmark,
}

impl<T: Real> ScalarFn<T> {
    pub fn eval(&self, x: T) -> T {
        match *self {
            ScalarFn::Zero => T::zero(),
            ScalarFn::Constant(c) => c,
            ScalarFn::Affine { offset, slope } => offset + slope * x,
            ScalarFn::Sinusoid { amplitude, frequency, phase, offset } => {
                amplitude * (frequency * x + phase).sin() + offset
            }
            ScalarFn::Benchmark => benchmark_f(x),
        }
    }

    pub fn derivative(&self, x: T) -> T {
        match *self {
            ScalarFn::Zero | ScalarFn::Constant(_) => T::zero(),
            ScalarFn::Affine { slope, .. } => slope,
            ScalarFn::Sinusoid { amplitude, frequency, phase, .. } => {
                amplitude * frequency * (frequency * x + phase).cos()
            }
            ScalarFn::Benchmark => {
                let ten = T::lit(10.0);
                ten * (ten * x).cos() + T::lit(0.05) * (x / ten).exp()
            }
        }
    }
}

/// Benchmark unknown dynamics; `1/(2 e^{−x/10})` is evaluated as `e^{x/10}/2`.
pub fn benchmark_f<T: Real>(x: T) -> T {
    let ten = T::lit(10.0);
    (ten * x).sin() + T::lit(0.5) * (x / ten).exp() + T::lit(5.0)
}

/// Full plant description. `f_true` is ground truth and never shown to a controller.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec<T> {
    pub h: ScalarFn<T>,
    pub g: ScalarFn<T>,
    pub f_true: ScalarFn<T>,
    pub domain_lo: T,
    pub domain_hi: T,
    pub g_min: T,
}

impl<T: Real> PlantSpec<T> {
    /// Validates the domain and that `|g| ≥ g_min` on a grid over it.
    pub fn new(
        h: ScalarFn<T>,
        g: ScalarFn<T>,
        f_true: ScalarFn<T>,
        domain_lo: T,
        domain_hi: T,
        g_min: T,
    ) -> Result<Self, PlantError> {
        if !(domain_hi > domain_lo) {
            return Err(PlantError::Invalid(format!("empty domain [{domain_lo}, {domain_hi}]")));
        }
        if !(g_min > T::zero()) {
            return Err(PlantError::Invalid(format!("g_min must be > 0, got {g_min}")));
        }
        let plant = Self { h, g, f_true, domain_lo, domain_hi, g_min };
        let steps = T::from_usize(GAIN_CHECK_POINTS - 1).unwrap();
        for k in 0..GAIN_CHECK_POINTS {
            let x = domain_lo + (domain_hi - domain_lo) * T::from_usize(k).unwrap() / steps;
            plant.checked_gain(x)?;
        }
        Ok(plant)
    }

    /// `h = 0`, `g = 1`, benchmark `f` on `[−1.5, 1.5]`.
    pub fn benchmark() -> Self {
        Self::new(
            ScalarFn::Zero,
            ScalarFn::Constant(T::one()),
            ScalarFn::Benchmark,
            T::lit(-1.5),
            T::lit(1.5),
            T::lit(DEFAULT_G_MIN),
        )
        .expect("benchmark plant is valid")
    }

    pub fn checked_gain(&self, x: T) -> Result<T, PlantError> {
        let gain = self.g.eval(x);
        if gain.abs() < self.g_min || !gain.is_finite() {
            return Err(PlantError::SingularGain {
                x: x.to_f64_lossy(),
                gain: gain.to_f64_lossy(),
                g_min: self.g_min.to_f64_lossy(),
            });
        }
        Ok(gain)
    }

    /// `ẋ = h(x) + f(x) + g(x) u`
    pub fn drift(&self, x: T, u: T) -> Result<T, PlantError> {
        let gain = self.checked_gain(x)?;
        Ok(self.h.eval(x) + self.f_true.eval(x) + gain * u)
    }

    /// `y = ẋ − h(x) − g(x) u + w`; with the exact `ẋ` this is `f(x) + w`.
    pub fn measure(&self, x: T, u: T, xdot: T, noise: T) -> T {
        xdot - self.h.eval(x) - self.g.eval(x) * u + noise
    }

    /// Grid maximum of `|f'|` over the domain.
    pub fn lipschitz_f(&self, grid_step: T) -> T {
        let n = ((self.domain_hi - self.domain_lo) / grid_step).ceil().to_usize().unwrap_or(0);
        (0..=n)
            .map(|k| {
                let x = (self.domain_lo + T::from_usize(k).unwrap() * grid_step).min(self.domain_hi);
                self.f_true.derivative(x).abs()
            })
            .fold(T::zero(), T::max)
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.domain_lo && x <= self.domain_hi
    }
}

/// One collected training pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement<T> {
    pub x: T,
    pub y: T,
    pub t: T,
}
