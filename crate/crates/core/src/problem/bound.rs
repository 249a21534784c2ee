use super::{check_theta, cross_derivative, Objective};
use crate::error::{invalid, mismatch, Result};
use crate::numerics::FdConfig;
use crate::prelude::*;

/// Strong-convexity modulus `rho` and the smoothness bounds `beta1`
/// (Hessian in `x`) and `beta2` (third-order mixed derivative) for a problem
/// on a caller-declared parameter region.
///
/// The crate never estimates these; they are supplied per problem and are
/// only as valid as the region they were derived for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessConstants {
    pub rho: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl SmoothnessConstants {
    pub fn new(rho: f64, beta1: f64, beta2: f64) -> Result<Self> {
        if !(rho > 0.0)
            || !(beta2 >= 0.0)
            || !(rho <= beta1)
            || !beta1.is_finite()
            || !beta2.is_finite()
        {
            return Err(invalid(
                "smoothness constants need 0 < rho <= beta1 and beta2 >= 0",
            ));
        }
        Ok(Self { rho, beta1, beta2 })
    }

    /// `4 β₁ / ρ²`.
    pub fn prefactor(&self) -> f64 {
        4.0 * self.beta1 / (self.rho * self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub regret: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Compares the realized regret of optimizing against `theta_hat` with the
/// deterministic bound
/// `4β₁/ρ² · (‖D(θ̂ − θ*)‖² + β₂²/4 · ‖θ̂ − θ*‖⁴)`, `D` taken at `(x*(θ*), θ*)`.
pub fn verify_regret_bound<P: Objective + ?Sized>(
    problem: &P,
    constants: SmoothnessConstants,
    theta_star: &[f64],
    theta_hat: &[f64],
    fd: FdConfig,
) -> Result<BoundCheck> {
    check_theta(problem, theta_star)?;
    if theta_hat.len() != theta_star.len() {
        return Err(mismatch("theta_hat and theta_star differ in length"));
    }
    let best = problem.solve(theta_star)?;
    let chosen = problem.solve(theta_hat)?;
    let regret = problem.evaluate(&chosen.x, theta_star) - best.value;

    let d = cross_derivative(problem, &best.x, theta_star, fd)?;
    let delta: Vec<f64> = theta_hat
        .iter()
        .zip(theta_star)
        .map(|(a, b)| a - b)
        .collect();
    let d_delta = d.matvec(&delta)?;
    let first = d_delta.iter().map(|v| v * v).sum::<f64>();
    let delta_sq = delta.iter().map(|v| v * v).sum::<f64>();
    let bound = constants.prefactor()
        * (first + constants.beta2 * constants.beta2 / 4.0 * delta_sq * delta_sq);
    Ok(BoundCheck {
        regret,
        bound,
        holds: regret <= bound + 1e-9,
    })
}
