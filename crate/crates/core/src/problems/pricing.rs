//! Revenue maximization under a logistic conversion model.
//!
//! A customer shown price `x` converts with probability
//! `c(x, θ) = 1 / (1 + exp(θ₀ + θ₁ x))`, and the objective is negated
//! revenue `f(x, θ) = −x · c(x, θ)`.

use crate::error::Result;
use crate::numerics::Matrix;
use crate::prelude::*;
use crate::problem::{minimize_1d, Bound, DecisionPoint, Objective};

/// Upper end of the price search bracket.
pub const PRICE_CEILING: f64 = 50.0;
const FOC_TOL: f64 = 1e-9;

/// `1 / (1 + exp(θ₀ + θ₁ x))`, evaluated without overflow.
pub fn conversion(x: f64, theta: &[f64]) -> f64 {
    let z = theta[0] + theta[1] * x;
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `∂²f/∂x∂θ` for the negated-revenue objective:
///
/// ```text
/// ∂²f/∂x∂θ₀ = c(1−c) + θ₁ x c(1−c)(2c−1)
/// ∂²f/∂x∂θ₁ = 2x c(1−c) + θ₁ x² c(1−c)(2c−1)
/// ```
pub fn pricing_d(x: f64, theta: &[f64]) -> [f64; 2] {
    let c = conversion(x, theta);
    let w = c * (1.0 - c);
    let curv = theta[1] * w * (2.0 * c - 1.0);
    [w + x * curv, 2.0 * x * w + x * x * curv]
}

#[derive(Debug, Clone)]
pub struct PricingProblem {
    price_grid: Vec<f64>,
    bounds: [Bound; 1],
}

impl PricingProblem {
    pub fn new(price_grid: Vec<f64>) -> Self {
        Self {
            price_grid,
            bounds: [Bound {
                lower: 0.0,
                upper: PRICE_CEILING,
            }],
        }
    }

    /// Candidate prices `0, 1, …, 9`.
    pub fn default_grid() -> Vec<f64> {
        (0..10).map(f64::from).collect()
    }

    pub fn price_grid(&self) -> &[f64] {
        &self.price_grid
    }

    pub fn revenue(x: f64, theta: &[f64]) -> f64 {
        x * conversion(x, theta)
    }

    /// `∂²f/∂x²`.
    pub fn curvature(x: f64, theta: &[f64]) -> f64 {
        let c = conversion(x, theta);
        c * (1.0 - c) * (2.0 * theta[1] - theta[1] * theta[1] * x * (1.0 - 2.0 * c))
    }
}

impl Default for PricingProblem {
    fn default() -> Self {
        Self::new(Self::default_grid())
    }
}

impl Objective for PricingProblem {
    fn label(&self) -> &str {
        "pricing"
    }

    fn dim_x(&self) -> usize {
        1
    }

    fn dim_theta(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64 {
        -Self::revenue(x[0], theta)
    }

    fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    fn analytic_cross_derivative(&self, x: &[f64], theta: &[f64]) -> Option<Matrix> {
        Some(Matrix::row_vector(&pricing_d(x[0], theta)))
    }

    fn analytic_gradient(&self, x: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
        let c = conversion(x[0], theta);
        Some(vec![-c + theta[1] * x[0] * c * (1.0 - c)])
    }

    fn theta_in_domain(&self, theta: &[f64]) -> bool {
        theta[1] > 0.0
    }

    fn solve(&self, theta: &[f64]) -> Result<DecisionPoint> {
        crate::problem::check_theta(self, theta)?;
        let x = minimize_1d(|x| -Self::revenue(x, theta), 0.0, PRICE_CEILING, FOC_TOL)?;
        Ok(DecisionPoint {
            x: vec![x],
            value: -Self::revenue(x, theta),
            converged: true,
            iterations: 0,
        })
    }
}
