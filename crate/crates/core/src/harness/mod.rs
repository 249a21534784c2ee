//! Monte Carlo evaluation of estimate-then-optimize under an allocation.

mod regret;
mod sweep;
mod trajectory;

pub use crate::numerics::{Executor, Sequential};
pub use regret::{
    compare_designs, evaluate_regret, regret_once, NamedAllocation, NamedReport, RegretReport,
    MAX_DISCARD_FRACTION,
};
pub use sweep::{loglog_slope, regret_vs_budget_sweep, SweepResult};
pub use trajectory::{quantile_sorted, trajectory_quantiles, QuantileBand, TrajectoryBands};
