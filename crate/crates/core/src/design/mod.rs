//! The regret-bound design criterion and the allocation optimizers.

mod allocate;
mod bound;
mod objective;
mod prior;

pub use allocate::{c_optimal_allocation, kkt_group_allocation, round_allocation};
pub use bound::{bound_terms, bound_terms_scaled, BoundReport};
pub use objective::{
    bayesian_design_objective, random_search, sample_composition, DesignObjective, PriorDraw,
    SearchOutcome,
};
pub use prior::{draw_valid, Prior, ValidDraw, MAX_PRIOR_ATTEMPTS};
