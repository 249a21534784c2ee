//! Structural models `f(x, θ)` and the inner solvers that compute
//! `x*(θ) = argmin_x f(x, θ)`.

mod bound;
mod lbfgs;
mod line;

pub use bound::{verify_regret_bound, BoundCheck, SmoothnessConstants};
pub use lbfgs::{minimize, SolverOptions};
pub use line::minimize_1d;

use crate::error::{invalid, Error, Result};
use crate::numerics::{cross_derivative_matrix, FdConfig, Matrix};
use crate::prelude::*;

/// Lower and upper limit of one decision coordinate. Either side may be
/// infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub const FREE: Bound = Bound {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(invalid("bound requires lower <= upper"));
        }
        Ok(Self { lower, upper })
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

/// A solved inner problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// A smooth objective `f(x, θ)` over a box of decisions.
///
/// Implementations must be stateless evaluators so they can be shared across
/// worker threads.
pub trait Objective: Sync {
    fn label(&self) -> &str;

    fn dim_x(&self) -> usize;

    fn dim_theta(&self) -> usize;

    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64;

    fn bounds(&self) -> &[Bound];

    /// Closed-form `∂²f/∂x∂θ`, when one is known.
    fn analytic_cross_derivative(&self, _x: &[f64], _theta: &[f64]) -> Option<Matrix> {
        None
    }

    /// Closed-form `∂f/∂x`, when one is known. Used for verification only;
    /// the solvers always difference numerically.
    fn analytic_gradient(&self, _x: &[f64], _theta: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Whether `θ` lies in the region where the model's assumptions hold.
    fn theta_in_domain(&self, _theta: &[f64]) -> bool {
        true
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions::default()
    }

    /// Initial points for [`Objective::solve`]; the best local solution wins.
    fn starting_points(&self, _theta: &[f64]) -> Vec<Vec<f64>> {
        vec![self.bounds().iter().map(|b| b.clamp(0.0)).collect()]
    }

    /// `x*(θ)`.
    fn solve(&self, theta: &[f64]) -> Result<DecisionPoint> {
        let opts = self.solver_options();
        let mut best: Option<DecisionPoint> = None;
        for x0 in self.starting_points(theta) {
            let candidate = minimize(self, theta, &x0, opts)?;
            if best.as_ref().map_or(true, |b| candidate.value < b.value) {
                best = Some(candidate);
            }
        }
        best.ok_or_else(|| invalid("no starting points"))
    }

    /// Local refinement of `x0` under `θ`.
    fn polish(&self, theta: &[f64], x0: &[f64]) -> Result<DecisionPoint> {
        minimize(self, theta, x0, self.solver_options())
    }
}

/// `D = ∂²f/∂x∂θ` at `(x, θ)`: the closed form when the problem has one,
/// otherwise the four-point stencil.
pub fn cross_derivative<P: Objective + ?Sized>(
    problem: &P,
    x: &[f64],
    theta: &[f64],
    fd: FdConfig,
) -> Result<Matrix> {
    if let Some(d) = problem.analytic_cross_derivative(x, theta) {
        return Ok(d);
    }
    cross_derivative_matrix(|x, t| problem.evaluate(x, t), x, theta, fd)
}

pub(crate) fn check_theta<P: Objective + ?Sized>(problem: &P, theta: &[f64]) -> Result<()> {
    if theta.len() != problem.dim_theta() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} expects {} parameters, got {}",
            problem.label(),
            problem.dim_theta(),
            theta.len()
        )));
    }
    Ok(())
}

/// An [`Objective`] assembled from a closure, for ad-hoc models and tests.
pub struct ClosureObjective<F> {
    label: String,
    dim_theta: usize,
    bounds: Vec<Bound>,
    f: F,
}

impl<F> ClosureObjective<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    pub fn new(label: impl Into<String>, bounds: Vec<Bound>, dim_theta: usize, f: F) -> Self {
        Self {
            label: label.into(),
            dim_theta,
            bounds,
            f,
        }
    }
}

impl<F> Objective for ClosureObjective<F>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    fn label(&self) -> &str {
        &self.label
    }

    fn dim_x(&self) -> usize {
        self.bounds.len()
    }

    fn dim_theta(&self) -> usize {
        self.dim_theta
    }

    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64 {
        (self.f)(x, theta)
    }

    fn bounds(&self) -> &[Bound] {
        &self.bounds
    }
}
