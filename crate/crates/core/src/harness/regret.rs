use crate::design::{draw_valid, Prior, ValidDraw};
use crate::error::{invalid, Error, Result};
use crate::estimation::{simulate_estimate, Allocation, CovarianceModel};
use crate::numerics::{Executor, RngStream};
use crate::prelude::*;
use crate::problem::Objective;

/// Largest share of replications that may be discarded before a run fails.
pub const MAX_DISCARD_FRACTION: f64 = 0.2;
const Z_95: f64 = 1.96;

/// Monte Carlo regret of one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub mean_regret: f64,
    /// `1.96 · s / √replications`.
    pub ci_half_width: f64,
    /// Replications that contributed to the mean.
    pub replications: usize,
    /// Replications dropped because an estimate or inner solve failed.
    pub discarded: usize,
    pub per_replication: Option<Vec<f64>>,
}

impl RegretReport {
    pub fn from_samples(samples: Vec<f64>, discarded: usize) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let ci = if n >= 2 {
            let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            Z_95 * (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            mean_regret: mean,
            ci_half_width: ci,
            replications: n,
            discarded,
            per_replication: Some(samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedAllocation {
    pub name: String,
    pub allocation: Allocation,
}

impl NamedAllocation {
    pub fn new(name: impl Into<String>, allocation: Allocation) -> Self {
        Self {
            name: name.into(),
            allocation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedReport {
    pub name: String,
    pub report: RegretReport,
}

/// Failures that condemn one replication's data rather than the setup.
pub(crate) fn is_replication_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::SeparationDetected
            | Error::RankDeficient
            | Error::SingularInformation
            | Error::NonFiniteEvaluation
            | Error::NoInteriorMinimum(_)
            | Error::NotConverged(_)
            | Error::DegenerateParameter(_)
            | Error::UnstableStep(_)
    )
}

/// `f(x̂, θ*) − f(x*, θ*)` for one simulated estimate.
///
/// The oracle value is refined by polishing from `x̂` under `θ*`, so a
/// local inner solve can never make the regret negative.
pub fn regret_once<P: Objective + ?Sized>(
    problem: &P,
    cov_model: &CovarianceModel,
    alloc: &Allocation,
    star: &ValidDraw,
    noise: RngStream,
) -> Result<f64> {
    let theta_hat = simulate_estimate(cov_model, alloc, &star.theta, noise)?;
    if !problem.theta_in_domain(&theta_hat) {
        return Err(Error::DegenerateParameter(
            "estimate left the parameter domain".into(),
        ));
    }
    let x_hat = problem.solve(&theta_hat)?.x;
    let f_hat = problem.evaluate(&x_hat, &star.theta);
    if !f_hat.is_finite() {
        return Err(Error::NonFiniteEvaluation);
    }
    let mut best = star.optimum.value;
    if let Ok(p) = problem.polish(&star.theta, &x_hat) {
        best = best.min(p.value);
    }
    Ok(f_hat - best)
}

/// Regret of each allocation under common random numbers.
///
/// Replication `r` draws `θ*` from `stream.child(r).child(0)` and every
/// allocation simulates its data from `stream.child(r).child(1)`. A
/// replication in which any allocation fails is dropped for all of them.
#[allow(clippy::too_many_arguments)]
pub fn compare_designs<P, E>(
    problem: &P,
    cov_model: &CovarianceModel,
    prior: &Prior,
    allocations: &[NamedAllocation],
    replications: usize,
    stream: RngStream,
    exec: &E,
) -> Result<Vec<NamedReport>>
where
    P: Objective + ?Sized,
    E: Executor,
{
    if allocations.is_empty() {
        return Err(invalid("need at least one allocation"));
    }
    if replications < 2 {
        return Err(invalid("need at least two replications"));
    }
    let rows = exec.map(replications, |r| -> Result<Option<Vec<f64>>> {
        let rep = stream.child(r as u64);
        let star = draw_valid(problem, prior, rep.child(0))?;
        let noise = rep.child(1);
        let mut out = Vec::with_capacity(allocations.len());
        for a in allocations {
            match regret_once(problem, cov_model, &a.allocation, &star, noise) {
                Ok(v) => out.push(v),
                Err(e) if is_replication_failure(&e) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(out))
    });
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(replications); allocations.len()];
    let mut discarded = 0;
    for row in rows {
        match row? {
            Some(v) => v
                .into_iter()
                .zip(samples.iter_mut())
                .for_each(|(x, s)| s.push(x)),
            None => discarded += 1,
        }
    }
    if discarded as f64 > MAX_DISCARD_FRACTION * replications as f64 {
        return Err(Error::TooManyDiscards {
            discarded,
            replications,
        });
    }
    Ok(allocations
        .iter()
        .zip(samples)
        .map(|(a, s)| NamedReport {
            name: a.name.clone(),
            report: RegretReport::from_samples(s, discarded),
        })
        .collect())
}

/// Monte Carlo regret of a single allocation.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_regret<P, E>(
    problem: &P,
    cov_model: &CovarianceModel,
    alloc: &Allocation,
    prior: &Prior,
    replications: usize,
    stream: RngStream,
    exec: &E,
) -> Result<RegretReport>
where
    P: Objective + ?Sized,
    E: Executor,
{
    let named = [NamedAllocation::new("allocation", alloc.clone())];
    let mut out = compare_designs(
        problem,
        cov_model,
        prior,
        &named,
        replications,
        stream,
        exec,
    )?;
    Ok(out.remove(0).report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::component_points;
    use crate::numerics::Sequential;
    use crate::problems::QuadraticProblem;

    #[test]
    fn ci_formula() {
        let r = RegretReport::from_samples(vec![1.0, 2.0, 3.0, 4.0], 0);
        assert!((r.mean_regret - 2.5).abs() < 1e-15);
        let s = (5.0f64 / 3.0).sqrt();
        assert!((r.ci_half_width - 1.96 * s / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_has_zero_regret() {
        let model = CovarianceModel::DiagonalMean {
            sigma: vec![0.0, 0.0],
        };
        let alloc = Allocation::from_counts(component_points(2), vec![5, 5]).unwrap();
        let prior = Prior::isotropic(vec![10.0, 5.0], 1.0).unwrap();
        let r = evaluate_regret(
            &QuadraticProblem::new(),
            &model,
            &alloc,
            &prior,
            20,
            RngStream::new(0, 0),
            &Sequential,
        )
        .unwrap();
        assert!(r.mean_regret.abs() < 1e-9);
    }

    #[test]
    fn duplicated_allocations_agree() {
        let model = CovarianceModel::DiagonalMean {
            sigma: vec![1.0, 3f64.sqrt()],
        };
        let alloc = Allocation::from_counts(component_points(2), vec![22, 78]).unwrap();
        let named = [
            NamedAllocation::new("a", alloc.clone()),
            NamedAllocation::new("b", alloc),
        ];
        let prior = Prior::isotropic(vec![10.0, 5.0], 1.0).unwrap();
        let out = compare_designs(
            &QuadraticProblem::new(),
            &model,
            &prior,
            &named,
            30,
            RngStream::new(7, 0),
            &Sequential,
        )
        .unwrap();
        assert_eq!(out[0].report, out[1].report);
    }

    #[test]
    fn too_few_replications() {
        let model = CovarianceModel::DiagonalMean {
            sigma: vec![1.0, 1.0],
        };
        let alloc = Allocation::from_counts(component_points(2), vec![5, 5]).unwrap();
        let prior = Prior::PointMass(vec![10.0, 5.0]);
        assert!(evaluate_regret(
            &QuadraticProblem::new(),
            &model,
            &alloc,
            &prior,
            1,
            RngStream::new(0, 0),
            &Sequential
        )
        .is_err());
    }
}
