//! The three worked problems: a scalar quadratic, logistic pricing, and
//! testing allocation in a multi-group SIR epidemic.

pub mod pandemic;
pub mod pricing;
pub mod quadratic;

pub use pandemic::{
    pandemic_group_sensitivity, pandemic_objective, sir_step, sir_trajectory, trace_variance,
    PandemicProblem, SirParams, SirState, StepOutcome,
};
pub use pricing::{conversion, pricing_d, PricingProblem};
pub use quadratic::{quadratic_d, QuadraticProblem};
