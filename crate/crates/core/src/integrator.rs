//! Classical fixed-step fourth-order Runge–Kutta.

use crate::scalar::Real;

/// Advances `y` in place by one step of size `dt` for `ẏ = rhs(y)`.
///
/// `rhs` writes the derivative of its first argument into the second.
pub fn rk4_step<T, F, E>(y: &mut [T], dt: T, mut rhs: F) -> Result<(), E>
where
    T: Real,
    F: FnMut(&[T], &mut [T]) -> Result<(), E>,
{
    let n = y.len();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let sixth = dt / T::lit(6.0);
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];

    rhs(y, &mut k1)?;
    for i in 0..n {
        tmp[i] = y[i] + half * dt * k1[i];
    }
    rhs(&tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = y[i] + half * dt * k2[i];
    }
    rhs(&tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    rhs(&tmp, &mut k4)?;
    for i in 0..n {
        y[i] += sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn decay(y: &[f64], out: &mut [f64]) -> Result<(), Infallible> {
        out[0] = -y[0];
        Ok(())
    }

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |dt: f64| {
            let mut y = [1.0];
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                rk4_step(&mut y, dt, decay).unwrap();
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 < 1e-6);
        assert!(e1 / e2 > 14.0 && e1 / e2 < 18.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let mut y = [1.0f64, 0.0];
        for _ in 0..1000 {
            rk4_step(&mut y, 1e-3, |s: &[f64], d: &mut [f64]| -> Result<(), Infallible> {
                d[0] = s[1];
                d[1] = -s[0];
                Ok(())
            })
            .unwrap();
        }
        assert!((y[0] - 1f64.cos()).abs() < 1e-12);
        assert!((y[1] + 1f64.sin()).abs() < 1e-12);
    }
}
