//! Central finite-difference stencils.

use crate::error::{invalid, Error, Result};
use crate::numerics::Matrix;
use crate::prelude::*;

/// Perturbation size for the mixed-partial stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    step_h: f64,
}

impl FdConfig {
    pub const DEFAULT_STEP: f64 = 1e-4;

    pub fn new(step_h: f64) -> Result<Self> {
        if !(step_h > 0.0 && step_h.is_finite()) {
            return Err(invalid("finite-difference step must be positive"));
        }
        Ok(Self { step_h })
    }

    pub fn step(&self) -> f64 {
        self.step_h
    }
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step_h: Self::DEFAULT_STEP,
        }
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteEvaluation)
    }
}

/// Four-point estimate of `∂²f/∂xᵢ∂θⱼ`:
///
/// ```text
/// [f(x+h, θ+h) - f(x+h, θ-h) - f(x-h, θ+h) + f(x-h, θ-h)] / 4h²
/// ```
pub fn mixed_second_derivative<F>(
    f: F,
    x: &[f64],
    theta: &[f64],
    i: usize,
    j: usize,
    cfg: FdConfig,
) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if i >= x.len() || j >= theta.len() {
        return Err(invalid("stencil index out of range"));
    }
    let h = cfg.step();
    let mut xs = x.to_vec();
    let mut ts = theta.to_vec();
    let mut eval = |dx: f64, dt: f64| {
        xs[i] = x[i] + dx;
        ts[j] = theta[j] + dt;
        finite(f(&xs, &ts))
    };
    let pp = eval(h, h)?;
    let pm = eval(h, -h)?;
    let mp = eval(-h, h)?;
    let mm = eval(-h, -h)?;
    Ok((pp - pm - mp + mm) / (4.0 * h * h))
}

/// `D = ∂²f/∂x∂θ` with one row per decision coordinate and one column per
/// parameter.
pub fn cross_derivative_matrix<F>(f: F, x: &[f64], theta: &[f64], cfg: FdConfig) -> Result<Matrix>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut d = Matrix::zeros(x.len(), theta.len());
    for i in 0..x.len() {
        for j in 0..theta.len() {
            d[(i, j)] = mixed_second_derivative(&f, x, theta, i, j, cfg)?;
        }
    }
    Ok(d)
}

/// Central-difference gradient of `g` with per-coordinate step
/// `h · max(1, |xᵢ|)`.
pub fn central_gradient<G>(g: G, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        probe[i] = x[i] + step;
        let up = finite(g(&probe))?;
        probe[i] = x[i] - step;
        let down = finite(g(&probe))?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * step));
    }
    Ok(grad)
}

/// Central first and second derivatives of a scalar function.
pub fn central_derivatives_1d<G>(g: G, x: f64, h: f64) -> Result<(f64, f64)>
where
    G: Fn(f64) -> f64,
{
    let up = finite(g(x + h))?;
    let mid = finite(g(x))?;
    let down = finite(g(x - h))?;
    Ok(((up - down) / (2.0 * h), (up - 2.0 * mid + down) / (h * h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_is_exact() {
        let f = |x: &[f64], t: &[f64]| x[0] * t[0];
        let cfg = FdConfig::new(1e-4).unwrap();
        for &(x, t) in &[(0.3, -2.0), (0.25, 0.5), (-0.7, 0.9), (1.0, 1.0)] {
            let v = mixed_second_derivative(f, &[x], &[t], 0, 0, cfg).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn quadratic_coefficient_derivative() {
        let f = |x: &[f64], t: &[f64]| t[1] * x[0] * x[0] / 2.0 + t[0] * x[0];
        let v =
            mixed_second_derivative(f, &[-2.0], &[10.0, 5.0], 0, 1, FdConfig::default()).unwrap();
        assert!((v + 2.0).abs() < 1e-6);
    }

    #[test]
    fn constant_in_theta_gives_zero_matrix() {
        let f = |x: &[f64], _t: &[f64]| x[0] * x[0] + 3.0 * x[1];
        let d =
            cross_derivative_matrix(f, &[1.0, 2.0], &[4.0, 5.0, 6.0], FdConfig::default()).unwrap();
        assert_eq!((d.rows(), d.cols()), (2, 3));
        assert!(d.as_slice().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn non_finite_stencil_is_an_error() {
        let f = |x: &[f64], t: &[f64]| (x[0] * t[0]).ln();
        let err = mixed_second_derivative(f, &[0.0], &[1.0], 0, 0, FdConfig::default());
        assert_eq!(err, Err(Error::NonFiniteEvaluation));
    }

    #[test]
    fn bad_indices_and_steps() {
        let f = |x: &[f64], t: &[f64]| x[0] * t[0];
        assert!(mixed_second_derivative(f, &[1.0], &[1.0], 1, 0, FdConfig::default()).is_err());
        assert!(FdConfig::new(0.0).is_err());
        assert!(FdConfig::new(f64::NAN).is_err());
    }
}
