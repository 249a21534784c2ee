use super::regret::{compare_designs, NamedAllocation, RegretReport};
use crate::design::Prior;
use crate::error::{invalid, Error, Result};
use crate::estimation::{Allocation, CovarianceModel};
use crate::numerics::{Executor, RngStream};
use crate::prelude::*;
use crate::problem::Objective;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Vec<u64>,
    pub optimized: Vec<RegretReport>,
    pub uniform: Vec<RegretReport>,
    /// Least-squares slope of log mean regret against log budget for the
    /// optimized allocations.
    pub loglog_slope: f64,
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("need at least two matching points"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateParameter(
            "log-log fit needs positive values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("budgets must differ"));
    }
    Ok(sxy / sxx)
}

/// Regret of the designed and baseline allocations at each budget. Every
/// budget reuses `stream`, so the same `θ*` draws appear at every point.
#[allow(clippy::too_many_arguments)]
pub fn regret_vs_budget_sweep<P, E, D, B>(
    problem: &P,
    cov_model: &CovarianceModel,
    prior: &Prior,
    budgets: &[u64],
    replications: usize,
    stream: RngStream,
    exec: &E,
    design: D,
    baseline: B,
) -> Result<SweepResult>
where
    P: Objective + ?Sized,
    E: Executor,
    D: Fn(u64) -> Result<Allocation>,
    B: Fn(u64) -> Result<Allocation>,
{
    if budgets.len() < 2 {
        return Err(invalid("a sweep needs at least two budgets"));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("budgets must be strictly increasing"));
    }
    let mut optimized = Vec::with_capacity(budgets.len());
    let mut uniform = Vec::with_capacity(budgets.len());
    for &n in budgets {
        let named = [
            NamedAllocation::new("optimized", design(n)?),
            NamedAllocation::new("uniform", baseline(n)?),
        ];
        let mut reports = compare_designs(
            problem,
            cov_model,
            prior,
            &named,
            replications,
            stream,
            exec,
        )?;
        uniform.push(reports.pop().expect("two reports").report);
        optimized.push(reports.pop().expect("two reports").report);
    }
    let x: Vec<f64> = budgets.iter().map(|&b| b as f64).collect();
    let y: Vec<f64> = optimized.iter().map(|r| r.mean_regret).collect();
    Ok(SweepResult {
        axis: budgets.to_vec(),
        loglog_slope: loglog_slope(&x, &y)?,
        optimized,
        uniform,
    })
}
