use crate::error::{invalid, mismatch, Error, Result};
use crate::numerics::rng::{sample_gamma, sample_standard_normal};
use crate::numerics::{Matrix, RngStream, StreamRng};
use crate::prelude::*;
use crate::problem::{DecisionPoint, Objective};

/// A distribution over `θ` to design against and to draw `θ*` from.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    PointMass(Vec<f64>),
    /// `N(mean, L Lᵀ)` with `chol = L`.
    Normal {
        mean: Vec<f64>,
        chol: Matrix,
    },
    /// Independent `Gamma(shape_i, scale)`; a zero shape pins the entry at 0.
    IndependentGamma {
        shapes: Vec<f64>,
        scale: f64,
    },
}

/// Attempts per prior draw before giving up.
pub const MAX_PRIOR_ATTEMPTS: usize = 1000;

impl Prior {
    pub fn normal(mean: Vec<f64>, cov: &Matrix) -> Result<Self> {
        if cov.rows() != mean.len() || !cov.is_square() {
            return Err(mismatch(
                "prior covariance must be square and match the mean",
            ));
        }
        Ok(Self::Normal {
            mean,
            chol: cov.cholesky()?,
        })
    }

    /// `N(mean, var · I)`.
    pub fn isotropic(mean: Vec<f64>, var: f64) -> Result<Self> {
        if !(var > 0.0) {
            return Err(invalid("prior variance must be positive"));
        }
        let chol = Matrix::identity(mean.len()).scaled(var.sqrt());
        Ok(Self::Normal { mean, chol })
    }

    pub fn gamma(shapes: Vec<f64>, scale: f64) -> Result<Self> {
        if shapes.iter().any(|s| !(*s >= 0.0 && s.is_finite())) || !(scale > 0.0) {
            return Err(invalid(
                "gamma shapes must be non-negative and the scale positive",
            ));
        }
        Ok(Self::IndependentGamma { shapes, scale })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::PointMass(v) => v.len(),
            Self::Normal { mean, .. } => mean.len(),
            Self::IndependentGamma { shapes, .. } => shapes.len(),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            Self::PointMass(v) => v.clone(),
            Self::Normal { mean, .. } => mean.clone(),
            Self::IndependentGamma { shapes, scale } => shapes.iter().map(|s| s * scale).collect(),
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Result<Vec<f64>> {
        match self {
            Self::PointMass(v) => Ok(v.clone()),
            Self::Normal { mean, chol } => {
                let z: Vec<f64> = (0..mean.len())
                    .map(|_| sample_standard_normal(rng))
                    .collect();
                let lz = chol.matvec(&z)?;
                Ok(mean.iter().zip(lz).map(|(m, e)| m + e).collect())
            }
            Self::IndependentGamma { shapes, scale } => shapes
                .iter()
                .map(|&s| {
                    if s == 0.0 {
                        Ok(0.0)
                    } else {
                        sample_gamma(rng, s, *scale)
                    }
                })
                .collect(),
        }
    }
}

/// A prior draw that lies in the problem's domain, with its solved optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidDraw {
    pub theta: Vec<f64>,
    pub optimum: DecisionPoint,
    /// Draws rejected before this one.
    pub rejected: usize,
}

/// Draws from `prior` until `θ` is in the problem's domain and its inner
/// problem solves. Attempt `a` reads from `stream.child(a)`.
pub fn draw_valid<P: Objective + ?Sized>(
    problem: &P,
    prior: &Prior,
    stream: RngStream,
) -> Result<ValidDraw> {
    if prior.dim() != problem.dim_theta() {
        return Err(mismatch(alloc::format!(
            "prior has dimension {} but {} has {} parameters",
            prior.dim(),
            problem.label(),
            problem.dim_theta()
        )));
    }
    for attempt in 0..MAX_PRIOR_ATTEMPTS {
        let theta = prior.sample(&mut stream.child(attempt as u64).rng())?;
        if !problem.theta_in_domain(&theta) {
            continue;
        }
        match problem.solve(&theta) {
            Ok(optimum) => {
                return Ok(ValidDraw {
                    theta,
                    optimum,
                    rejected: attempt,
                })
            }
            Err(e) if is_solver_failure(&e) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::PriorExhausted(MAX_PRIOR_ATTEMPTS))
}

/// Errors that condemn a particular `θ` rather than the configuration.
pub(crate) fn is_solver_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NonFiniteEvaluation
            | Error::NoInteriorMinimum(_)
            | Error::NotConverged(_)
            | Error::DegenerateParameter(_)
            | Error::UnstableStep(_)
    )
}
