//! The worked examples wired end to end: designing an allocation, comparing
//! it with the uniform baseline, budget sweeps, estimated-objective curves,
//! epidemic trajectories and the deterministic-bound check.
//!
//! Randomness is split into fixed streams of the master seed:
//! [`DESIGN_STREAM`] for the prior draws behind a design,
//! [`SEARCH_STREAM`] for random search and the KKT tie-break,
//! [`EVAL_STREAM`] for Monte Carlo replications and [`BOUND_STREAM`] for the
//! bound check. Output therefore depends only on the seed and the
//! configuration.

use regret_design_core::design::{
    c_optimal_allocation, kkt_group_allocation, random_search, round_allocation, DesignObjective,
    Prior,
};
use regret_design_core::estimation::{
    component_points, group_points, price_points, simulate_estimate, Allocation, CovarianceModel,
    DesignPoint,
};
use regret_design_core::harness::{
    compare_designs, regret_vs_budget_sweep, trajectory_quantiles, NamedAllocation, NamedReport,
    SweepResult, TrajectoryBands,
};
use regret_design_core::numerics::{Executor, FdConfig, Matrix, RngStream};
use regret_design_core::problem::{
    verify_regret_bound, BoundCheck, Objective, SmoothnessConstants,
};
use regret_design_core::problems::{
    quadratic_d, PandemicProblem, PricingProblem, QuadraticProblem, SirParams,
};

use crate::config::{DesignAt, PandemicConfig, PricingConfig, QuadraticConfig};
use crate::error::CliError;

pub const DESIGN_STREAM: u64 = 1;
pub const SEARCH_STREAM: u64 = 2;
pub const EVAL_STREAM: u64 = 3;
pub const BOUND_STREAM: u64 = 4;

/// Floor on every component's sample count for closed-form designs.
const MIN_PER_POINT: u64 = 1;

/// An optimized allocation and its design criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub allocation: Allocation,
    /// Prior-averaged `Tr(D′ Σ D′ᵀ)` at this allocation.
    pub objective: f64,
    /// Per-point `ρ_j` for closed-form designs.
    pub sensitivities: Option<Vec<f64>>,
    /// Prior samples rejected while building the criterion.
    pub rejected_prior_draws: usize,
}

/// One configured worked example.
pub trait Experiment: Sync {
    type Problem: Objective;

    fn name(&self) -> &'static str;
    fn problem(&self) -> &Self::Problem;
    fn cov_model(&self) -> &CovarianceModel;
    fn prior(&self) -> &Prior;
    fn points(&self) -> Vec<DesignPoint>;
    fn budget(&self) -> u64;
    fn replications(&self) -> usize;
    fn sweep_budgets(&self) -> &[u64];

    /// Optimized allocations for each budget, sharing one set of prior draws.
    fn designs<E: Executor>(
        &self,
        budgets: &[u64],
        seed: u64,
        exec: &E,
    ) -> Result<Vec<Design>, CliError>;

    fn design<E: Executor>(&self, budget: u64, seed: u64, exec: &E) -> Result<Design, CliError> {
        Ok(self.designs(&[budget], seed, exec)?.remove(0))
    }

    fn uniform(&self, budget: u64) -> Result<Allocation, CliError> {
        Ok(Allocation::uniform(self.points(), budget)?)
    }
}

/// Regret of each allocation under common random numbers.
pub fn compare<X: Experiment, E: Executor>(
    exp: &X,
    allocations: &[NamedAllocation],
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<NamedReport>, CliError> {
    Ok(compare_designs(
        exp.problem(),
        exp.cov_model(),
        exp.prior(),
        allocations,
        replications,
        RngStream::new(seed, EVAL_STREAM),
        exec,
    )?)
}

/// The optimized allocation against the uniform baseline.
pub fn optimized_vs_uniform<X: Experiment, E: Executor>(
    exp: &X,
    budget: u64,
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<(Design, Vec<NamedReport>), CliError> {
    let design = exp.design(budget, seed, exec)?;
    let named = [
        NamedAllocation::new("optimized", design.allocation.clone()),
        NamedAllocation::new("uniform", exp.uniform(budget)?),
    ];
    let reports = compare(exp, &named, replications, seed, exec)?;
    Ok((design, reports))
}

/// Optimized and uniform regret at each budget.
pub fn sweep<X: Experiment, E: Executor>(
    exp: &X,
    budgets: &[u64],
    replications: usize,
    seed: u64,
    exec: &E,
) -> Result<(Vec<Design>, SweepResult), CliError> {
    if budgets.len() < 2 || budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config(
            "--budgets",
            "need at least two strictly increasing budgets",
        ));
    }
    let designs = exp.designs(budgets, seed, exec)?;
    let lookup = |n: u64| {
        let i = budgets
            .iter()
            .position(|&b| b == n)
            .expect("budget from the sweep axis");
        Ok(designs[i].allocation.clone())
    };
    let result = regret_vs_budget_sweep(
        exp.problem(),
        exp.cov_model(),
        exp.prior(),
        budgets,
        replications,
        RngStream::new(seed, EVAL_STREAM),
        exec,
        lookup,
        |n| Allocation::uniform(exp.points(), n),
    )?;
    Ok((designs, result))
}

/// `f(x, θ̂)` on a grid for one simulated estimate per allocation, with the
/// true curve and each resulting decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub theta_star: Vec<f64>,
    pub x_star: f64,
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub estimated: Vec<EstimatedCurve>,
    /// Replication whose data produced the estimates.
    pub replication: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedCurve {
    pub name: String,
    pub theta_hat: Vec<f64>,
    pub values: Vec<f64>,
    pub decision: f64,
    /// `f(x̂, θ*)`.
    pub decision_value: f64,
}

/// Estimated objectives at `θ*` = the prior mean for one-dimensional
/// decisions. Uses the first replication in which every allocation yields a
/// usable estimate.
pub fn estimated_curves<X: Experiment>(
    exp: &X,
    allocations: &[NamedAllocation],
    points: usize,
    halfwidth: f64,
    seed: u64,
) -> Result<Curves, CliError> {
    let problem = exp.problem();
    if problem.dim_x() != 1 {
        return Err(CliError::config(
            "--problem",
            "curves need a one-dimensional decision",
        ));
    }
    let theta_star = exp.prior().mean();
    let x_star = problem.solve(&theta_star)?.x[0];
    let bound = problem.bounds()[0];
    let lo = bound.clamp(x_star - halfwidth);
    let hi = bound.clamp(x_star + halfwidth);
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let curve = |theta: &[f64]| {
        grid.iter()
            .map(|&x| problem.evaluate(&[x], theta))
            .collect::<Vec<f64>>()
    };
    let stream = RngStream::new(seed, EVAL_STREAM);
    const MAX_TRIES: usize = 100;
    'rep: for r in 0..MAX_TRIES {
        let noise = stream.child(r as u64).child(1);
        let mut estimated = Vec::with_capacity(allocations.len());
        for a in allocations {
            let Ok(theta_hat) =
                simulate_estimate(exp.cov_model(), &a.allocation, &theta_star, noise)
            else {
                continue 'rep;
            };
            if !problem.theta_in_domain(&theta_hat) {
                continue 'rep;
            }
            let Ok(sol) = problem.solve(&theta_hat) else {
                continue 'rep;
            };
            estimated.push(EstimatedCurve {
                name: a.name.clone(),
                values: curve(&theta_hat),
                decision: sol.x[0],
                decision_value: problem.evaluate(&sol.x, &theta_star),
                theta_hat,
            });
        }
        return Ok(Curves {
            truth: curve(&theta_star),
            theta_star,
            x_star,
            grid,
            estimated,
            replication: r,
        });
    }
    Err(CliError::Runtime(format!(
        "no usable estimate in {MAX_TRIES} replications"
    )))
}

pub struct QuadraticExperiment {
    config: QuadraticConfig,
    problem: QuadraticProblem,
    model: CovarianceModel,
    prior: Prior,
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Matrix::from_rows(&refs).map_err(|e| CliError::config(field, e.to_string()))
}

fn normal_prior(mean: &[f64], cov: &[Vec<f64>]) -> Result<Prior, CliError> {
    Prior::normal(mean.to_vec(), &matrix("prior_cov", cov)?).map_err(|e| {
        CliError::config(
            "prior_cov",
            format!("must be symmetric positive definite ({e})"),
        )
    })
}

impl QuadraticExperiment {
    pub fn new(config: QuadraticConfig) -> Result<Self, CliError> {
        config.validate()?;
        Ok(Self {
            prior: normal_prior(&config.prior_mean, &config.prior_cov)?,
            model: CovarianceModel::DiagonalMean {
                sigma: config.sigma.clone(),
            },
            problem: QuadraticProblem::new(),
            config,
        })
    }

    pub fn config(&self) -> &QuadraticConfig {
        &self.config
    }

    /// Every split `(k, budget − k)` with both parts at least `split_min`.
    pub fn splits(&self, budget: u64) -> Result<Vec<NamedAllocation>, CliError> {
        let lo = self.config.split_min;
        if 2 * lo > budget {
            return Err(CliError::config("split_min", "exceeds half the budget"));
        }
        (lo..=budget - lo)
            .map(|k| {
                Ok(NamedAllocation::new(
                    format!("split_{k}"),
                    Allocation::from_counts(self.points(), vec![k, budget - k])?,
                ))
            })
            .collect()
    }

    /// Realized regret against the deterministic bound for noisy estimates
    /// around `bound.theta_star`. Draws with `θ₁` outside the configured
    /// region are skipped and counted.
    pub fn verify_bound(
        &self,
        seed: u64,
    ) -> Result<(Vec<(Vec<f64>, BoundCheck)>, usize), CliError> {
        let b = &self.config.bound;
        let constants = SmoothnessConstants::new(b.rho, b.beta1, b.beta2)
            .map_err(|e| CliError::config("bound", e.to_string()))?;
        let sd = b.noise_var.sqrt();
        let stream = RngStream::new(seed, BOUND_STREAM);
        let mut out = Vec::with_capacity(b.draws);
        let mut skipped = 0;
        for i in 0..b.draws {
            let mut rng = stream.child(i as u64).rng();
            let theta_hat: Vec<f64> = b
                .theta_star
                .iter()
                .map(|t| {
                    t + sd * regret_design_core::numerics::rng::sample_standard_normal(&mut rng)
                })
                .collect();
            if !(theta_hat[1] >= b.theta1_range[0] && theta_hat[1] <= b.theta1_range[1]) {
                skipped += 1;
                continue;
            }
            let check = verify_regret_bound(
                &self.problem,
                constants,
                &b.theta_star,
                &theta_hat,
                FdConfig::default(),
            )?;
            out.push((theta_hat, check));
        }
        Ok((out, skipped))
    }
}

impl Experiment for QuadraticExperiment {
    type Problem = QuadraticProblem;

    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn problem(&self) -> &QuadraticProblem {
        &self.problem
    }

    fn cov_model(&self) -> &CovarianceModel {
        &self.model
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn points(&self) -> Vec<DesignPoint> {
        component_points(2)
    }

    fn budget(&self) -> u64 {
        self.config.budget
    }

    fn replications(&self) -> usize {
        self.config.replications
    }

    fn sweep_budgets(&self) -> &[u64] {
        &self.config.sweep_budgets
    }

    fn designs<E: Executor>(
        &self,
        budgets: &[u64],
        seed: u64,
        exec: &E,
    ) -> Result<Vec<Design>, CliError> {
        let (prior, draws) = match self.config.design_at {
            DesignAt::PriorMean => (Prior::PointMass(self.prior.mean()), 1),
            DesignAt::PriorAverage => (self.prior.clone(), self.config.prior_draws),
        };
        let obj = DesignObjective::build(
            &self.problem,
            self.model.clone(),
            self.points(),
            &prior,
            draws,
            budgets[0],
            RngStream::new(seed, DESIGN_STREAM),
            FdConfig::default(),
            exec,
        )?;
        let sensitivities = match self.config.design_at {
            DesignAt::PriorMean => {
                let d = quadratic_d(&self.prior.mean())?;
                d.iter()
                    .zip(&self.config.sigma)
                    .map(|(d, s)| d.abs() * s)
                    .collect()
            }
            DesignAt::PriorAverage => obj.group_sensitivities()?,
        };
        let unit = c_optimal_allocation(&sensitivities, &[1.0, 1.0])?;
        budgets
            .iter()
            .map(|&b| {
                let allocation = round_allocation(&unit, b, MIN_PER_POINT)?;
                Ok(Design {
                    objective: obj.evaluate(&allocation)?,
                    allocation,
                    sensitivities: Some(sensitivities.clone()),
                    rejected_prior_draws: obj.rejected(),
                })
            })
            .collect()
    }
}

pub struct PricingExperiment {
    config: PricingConfig,
    problem: PricingProblem,
    model: CovarianceModel,
    prior: Prior,
}

impl PricingExperiment {
    pub fn new(config: PricingConfig) -> Result<Self, CliError> {
        config.validate()?;
        Ok(Self {
            prior: normal_prior(&config.prior_mean, &config.prior_cov)?,
            model: CovarianceModel::LogisticMle,
            problem: PricingProblem::new(config.prices.clone()),
            config,
        })
    }

    pub fn config(&self) -> &PricingConfig {
        &self.config
    }
}

impl Experiment for PricingExperiment {
    type Problem = PricingProblem;

    fn name(&self) -> &'static str {
        "pricing"
    }

    fn problem(&self) -> &PricingProblem {
        &self.problem
    }

    fn cov_model(&self) -> &CovarianceModel {
        &self.model
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn points(&self) -> Vec<DesignPoint> {
        price_points(&self.config.prices)
    }

    fn budget(&self) -> u64 {
        self.config.budget
    }

    fn replications(&self) -> usize {
        self.config.replications
    }

    fn sweep_budgets(&self) -> &[u64] {
        &self.config.sweep_budgets
    }

    fn designs<E: Executor>(
        &self,
        budgets: &[u64],
        seed: u64,
        exec: &E,
    ) -> Result<Vec<Design>, CliError> {
        let base = DesignObjective::build(
            &self.problem,
            self.model.clone(),
            self.points(),
            &self.prior,
            self.config.prior_draws,
            budgets[0],
            RngStream::new(seed, DESIGN_STREAM),
            FdConfig::default(),
            exec,
        )?;
        budgets
            .iter()
            .map(|&b| {
                let obj = DesignObjective::from_draws(
                    self.model.clone(),
                    self.points(),
                    b,
                    base.draws().to_vec(),
                    base.rejected(),
                );
                let found = random_search(
                    &obj,
                    self.config.candidates,
                    RngStream::new(seed, SEARCH_STREAM),
                    exec,
                )?;
                Ok(Design {
                    allocation: found.allocation,
                    objective: found.objective,
                    sensitivities: None,
                    rejected_prior_draws: base.rejected(),
                })
            })
            .collect()
    }
}

pub struct PandemicExperiment {
    config: PandemicConfig,
    problem: PandemicProblem,
    model: CovarianceModel,
    prior: Prior,
}

impl PandemicExperiment {
    pub fn new(config: PandemicConfig) -> Result<Self, CliError> {
        config.validate()?;
        let params = SirParams {
            contacts: matrix("contacts", &config.contacts)?,
            kappa: config.kappa,
            gamma: config.gamma,
            group_sizes: config.group_sizes.clone(),
            test_capacity: config.test_capacity,
            horizon: config.horizon,
            initial_infected: config.initial_infected.clone(),
        };
        let problem = PandemicProblem::new(params)
            .map_err(|e| CliError::config("contacts", e.to_string()))?;
        let prior = Prior::gamma(problem.default_theta(), config.prior_scale)
            .map_err(|e| CliError::config("prior_scale", e.to_string()))?;
        Ok(Self {
            model: CovarianceModel::LognormalGroupMean {
                groups: problem.groups(),
            },
            problem,
            prior,
            config,
        })
    }

    pub fn config(&self) -> &PandemicConfig {
        &self.config
    }

    /// Quartile bands of cumulative infections under the optimized and
    /// uniform allocations at `budget`.
    pub fn trajectories<E: Executor>(
        &self,
        budget: u64,
        draws: usize,
        seed: u64,
        exec: &E,
    ) -> Result<(Design, TrajectoryBands), CliError> {
        let design = self.design(budget, seed, exec)?;
        let named = [
            NamedAllocation::new("optimized", design.allocation.clone()),
            NamedAllocation::new("uniform", self.uniform(budget)?),
        ];
        let bands = trajectory_quantiles(
            &self.problem,
            &self.model,
            &self.prior,
            &named,
            draws,
            RngStream::new(seed, EVAL_STREAM),
            exec,
        )?;
        Ok((design, bands))
    }
}

impl Experiment for PandemicExperiment {
    type Problem = PandemicProblem;

    fn name(&self) -> &'static str {
        "pandemic"
    }

    fn problem(&self) -> &PandemicProblem {
        &self.problem
    }

    fn cov_model(&self) -> &CovarianceModel {
        &self.model
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn points(&self) -> Vec<DesignPoint> {
        group_points(self.problem.groups())
    }

    fn budget(&self) -> u64 {
        self.config.budget
    }

    fn replications(&self) -> usize {
        self.config.replications
    }

    fn sweep_budgets(&self) -> &[u64] {
        &self.config.sweep_budgets
    }

    fn designs<E: Executor>(
        &self,
        budgets: &[u64],
        seed: u64,
        exec: &E,
    ) -> Result<Vec<Design>, CliError> {
        let fd = FdConfig::new(self.config.fd_step)
            .map_err(|e| CliError::config("fd_step", e.to_string()))?;
        let obj = DesignObjective::build(
            &self.problem,
            self.model.clone(),
            self.points(),
            &self.prior,
            self.config.prior_draws,
            budgets[0],
            RngStream::new(seed, DESIGN_STREAM),
            fd,
            exec,
        )?;
        let rho = obj.group_sensitivities()?;
        budgets
            .iter()
            .map(|&b| {
                let allocation =
                    kkt_group_allocation(&rho, b, &mut RngStream::new(seed, SEARCH_STREAM).rng())?;
                Ok(Design {
                    objective: obj.evaluate(&allocation)?,
                    allocation,
                    sensitivities: Some(rho.clone()),
                    rejected_prior_draws: obj.rejected(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use regret_design_core::numerics::Sequential;

    #[test]
    fn quadratic_default_design_is_22_78() {
        let exp = QuadraticExperiment::new(QuadraticConfig::default()).unwrap();
        let d = exp.design(100, 0, &Sequential).unwrap();
        assert_eq!(d.allocation.counts().unwrap(), &[22, 78]);
        // Tr = 1/22 + 4·3/78 at the prior mean.
        assert!((d.objective - (1.0 / 22.0 + 12.0 / 78.0)).abs() < 1e-14);
    }

    #[test]
    fn splits_cover_the_range() {
        let exp = QuadraticExperiment::new(QuadraticConfig::default()).unwrap();
        let s = exp.splits(100).unwrap();
        assert_eq!(s.len(), 91);
        assert_eq!(s[0].allocation.counts().unwrap(), &[5, 95]);
        assert_eq!(s[90].allocation.counts().unwrap(), &[95, 5]);
    }

    #[test]
    fn curves_at_zero_noise_match_truth() {
        let cfg = QuadraticConfig {
            sigma: vec![0.0, 0.0],
            ..QuadraticConfig::default()
        };
        let exp = QuadraticExperiment::new(cfg).unwrap();
        let named = [NamedAllocation::new("uniform", exp.uniform(100).unwrap())];
        let c = estimated_curves(&exp, &named, 11, 2.0, 0).unwrap();
        assert_eq!(c.estimated[0].values, c.truth);
        assert!((c.estimated[0].decision + 2.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_single_budget() {
        let exp = QuadraticExperiment::new(QuadraticConfig::default()).unwrap();
        assert!(sweep(&exp, &[100], 10, 0, &Sequential).is_err());
    }
}
