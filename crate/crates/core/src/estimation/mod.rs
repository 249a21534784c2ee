//! Experiment allocations, the covariance they induce on `θ̂`, and the
//! data-generating processes that produce `θ̂`.

mod allocation;
mod covariance;
mod logistic;

pub use allocation::{
    component_points, group_points, price_points, Allocation, DesignPoint, Weights,
};
pub use covariance::{
    covariance, point_sensitivities, simulate_estimate, trace_criterion, CovarianceModel,
};
pub use logistic::{
    fit_logistic_mle, fit_pooled, logistic_information, FitResult, PooledData, SEPARATION_NORM,
};
