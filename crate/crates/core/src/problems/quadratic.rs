//! `f(x, θ) = θ₁/2 · x² + θ₀ · x`, valid for `θ₁ > 0`.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::prelude::*;
use crate::problem::{Bound, DecisionPoint, Objective};

#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    bounds: [Bound; 1],
}

impl QuadraticProblem {
    pub fn new() -> Self {
        Self {
            bounds: [Bound::FREE],
        }
    }

    pub fn optimum(theta: &[f64]) -> f64 {
        -theta[0] / theta[1]
    }

    /// `f(x̂, θ*) − f(x*, θ*) = θ₁*/2 · (x̂ − x*)²`.
    pub fn closed_form_regret(theta_star: &[f64], x_hat: f64) -> f64 {
        let gap = x_hat - Self::optimum(theta_star);
        0.5 * theta_star[1] * gap * gap
    }
}

impl Default for QuadraticProblem {
    fn default() -> Self {
        Self::new()
    }
}

/// `D = (1, −θ₀/θ₁)` at the optimum.
pub fn quadratic_d(theta: &[f64]) -> Result<[f64; 2]> {
    if theta[1] == 0.0 {
        return Err(Error::DegenerateParameter(
            "theta_1 = 0 has no optimum".into(),
        ));
    }
    Ok([1.0, -theta[0] / theta[1]])
}

impl Objective for QuadraticProblem {
    fn label(&self) -> &str {
        "quadratic"
    }

    fn dim_x(&self) -> usize {
        1
    }

    fn dim_theta(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64 {
        0.5 * theta[1] * x[0] * x[0] + theta[0] * x[0]
    }

    fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    fn analytic_cross_derivative(&self, x: &[f64], _theta: &[f64]) -> Option<Matrix> {
        Some(Matrix::row_vector(&[1.0, x[0]]))
    }

    fn analytic_gradient(&self, x: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
        Some(vec![theta[1] * x[0] + theta[0]])
    }

    fn theta_in_domain(&self, theta: &[f64]) -> bool {
        theta[1] > 0.0
    }

    fn solve(&self, theta: &[f64]) -> Result<DecisionPoint> {
        if !self.theta_in_domain(theta) {
            return Err(Error::DegenerateParameter(
                "quadratic needs theta_1 > 0".into(),
            ));
        }
        crate::problem::check_theta(self, theta)?;
        let x = Self::optimum(theta);
        Ok(DecisionPoint {
            x: vec![x],
            value: self.evaluate(&[x], theta),
            converged: true,
            iterations: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cross_derivative_matrix, FdConfig};

    #[test]
    fn d_examples() {
        assert_eq!(quadratic_d(&[10.0, 5.0]).unwrap(), [1.0, -2.0]);
        assert_eq!(quadratic_d(&[0.0, 1.0]).unwrap(), [1.0, 0.0]);
        assert!(quadratic_d(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn d_matches_stencil() {
        let p = QuadraticProblem::new();
        let theta = [3.0, 2.0];
        let x = [QuadraticProblem::optimum(&theta)];
        let fd = cross_derivative_matrix(|x, t| p.evaluate(x, t), &x, &theta, FdConfig::default())
            .unwrap();
        let d = quadratic_d(&theta).unwrap();
        assert!((fd[(0, 0)] - d[0]).abs() < 1e-6 && (fd[(0, 1)] - d[1]).abs() < 1e-6);
    }

    #[test]
    fn solve_and_regret_identity() {
        let p = QuadraticProblem::new();
        let r = p.solve(&[10.0, 5.0]).unwrap();
        assert_eq!(r.x[0], -2.0);
        let iterative =
            crate::problem::minimize(&p, &[10.0, 5.0], &[0.0], p.solver_options()).unwrap();
        assert!((iterative.x[0] + 2.0).abs() < 1e-8);
        let star = [10.0, 5.0];
        let x_hat = -1.7;
        let direct = p.evaluate(&[x_hat], &star) - p.evaluate(&[-2.0], &star);
        assert!((direct - QuadraticProblem::closed_form_regret(&star, x_hat)).abs() < 1e-10);
        assert!(p.solve(&[1.0, -1.0]).is_err());
    }
}
