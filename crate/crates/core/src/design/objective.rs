use super::prior::{draw_valid, Prior};
use crate::error::{invalid, Error, Result};
use crate::estimation::{
    point_sensitivities, trace_criterion, Allocation, CovarianceModel, DesignPoint,
};
use crate::numerics::rng::sample_distinct_sorted;
use crate::numerics::{Executor, FdConfig, Matrix, RngStream};
use crate::prelude::*;
use crate::problem::{cross_derivative, Objective};

/// One prior sample with its optimum and cross-derivative, reused for every
/// candidate allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDraw {
    pub theta: Vec<f64>,
    pub x_star: Vec<f64>,
    pub d: Matrix,
}

/// The Bayesian trace criterion `E_θ[Tr(D′ Σ D′ᵀ / n)]` over a fixed set of
/// prior draws.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignObjective {
    cov_model: CovarianceModel,
    points: Vec<DesignPoint>,
    budget: u64,
    draws: Vec<PriorDraw>,
    rejected: usize,
}

impl DesignObjective {
    /// Draws `prior_draws` parameters (draw `i` from `stream.child(i)`),
    /// solves each inner problem and caches `D′`.
    #[allow(clippy::too_many_arguments)]
    pub fn build<P, E>(
        problem: &P,
        cov_model: CovarianceModel,
        points: Vec<DesignPoint>,
        prior: &Prior,
        prior_draws: usize,
        budget: u64,
        stream: RngStream,
        fd: FdConfig,
        exec: &E,
    ) -> Result<Self>
    where
        P: Objective + ?Sized,
        E: Executor,
    {
        if prior_draws == 0 {
            return Err(invalid("need at least one prior draw"));
        }
        if cov_model.dim_theta() != problem.dim_theta() {
            return Err(invalid(
                "covariance model and problem disagree on the parameter count",
            ));
        }
        let results = exec.map(prior_draws, |i| -> Result<(PriorDraw, usize)> {
            let v = draw_valid(problem, prior, stream.child(i as u64))?;
            let d = cross_derivative(problem, &v.optimum.x, &v.theta, fd)?;
            Ok((
                PriorDraw {
                    theta: v.theta,
                    x_star: v.optimum.x,
                    d,
                },
                v.rejected,
            ))
        });
        let mut draws = Vec::with_capacity(prior_draws);
        let mut rejected = 0;
        for r in results {
            let (draw, rej) = r?;
            draws.push(draw);
            rejected += rej;
        }
        Ok(Self::from_draws(cov_model, points, budget, draws, rejected))
    }

    pub fn from_draws(
        cov_model: CovarianceModel,
        points: Vec<DesignPoint>,
        budget: u64,
        draws: Vec<PriorDraw>,
        rejected: usize,
    ) -> Self {
        Self {
            cov_model,
            points,
            budget,
            draws,
            rejected,
        }
    }

    pub fn cov_model(&self) -> &CovarianceModel {
        &self.cov_model
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn draws(&self) -> &[PriorDraw] {
        &self.draws
    }

    /// Prior samples rejected while building.
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn evaluate(&self, alloc: &Allocation) -> Result<f64> {
        bayesian_design_objective(self, alloc)
    }

    /// For diagonal models, the `ρ_j` with
    /// `objective = Σ_j ρ_j² / n_j`: `ρ_j² ` is the prior average of the
    /// per-point sensitivity.
    pub fn group_sensitivities(&self) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.points.len()];
        for draw in &self.draws {
            let s = point_sensitivities(&self.cov_model, &self.points, &draw.theta, &draw.d)?;
            for (a, v) in acc.iter_mut().zip(s) {
                *a += v;
            }
        }
        let n = self.draws.len() as f64;
        Ok(acc.into_iter().map(|a| (a / n).sqrt()).collect())
    }
}

/// Prior average of `Tr(D′ Σ(alloc) D′ᵀ)`; the allocation's counts carry the
/// `1/n` scaling.
pub fn bayesian_design_objective(obj: &DesignObjective, alloc: &Allocation) -> Result<f64> {
    if alloc.points() != obj.points() {
        return Err(invalid("allocation is over different design points"));
    }
    let mut total = 0.0;
    for draw in &obj.draws {
        total += trace_criterion(&obj.cov_model, alloc, &draw.theta, &draw.d)?;
    }
    Ok(total / obj.draws.len() as f64)
}

/// Best allocation found by random search, with its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub allocation: Allocation,
    pub objective: f64,
    /// Candidates skipped because their covariance was singular.
    pub infeasible: usize,
}

/// A composition of `total` into `parts` non-negative counts, uniform over
/// all such compositions (stars and bars).
pub fn sample_composition(
    rng: &mut crate::numerics::StreamRng,
    total: u64,
    parts: usize,
) -> Vec<u64> {
    if parts == 1 {
        return vec![total];
    }
    let slots = total as usize + parts - 1;
    let bars = sample_distinct_sorted(rng, slots, parts - 1);
    let mut counts = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for &b in &bars {
        counts.push((b - prev) as u64);
        prev = b + 1;
    }
    counts.push((slots - prev) as u64);
    counts
}

/// Evaluates `n_candidates` uniformly random integer allocations of the
/// objective's budget and keeps the best. Candidate `i` is drawn from
/// `stream.child(i)`; ties go to the lower index.
pub fn random_search<E: Executor>(
    obj: &DesignObjective,
    n_candidates: usize,
    stream: RngStream,
    exec: &E,
) -> Result<SearchOutcome> {
    if n_candidates == 0 {
        return Err(invalid("need at least one candidate"));
    }
    let m = obj.points.len();
    let results = exec.map(n_candidates, |i| -> Result<Option<(Allocation, f64)>> {
        let counts = sample_composition(&mut stream.child(i as u64).rng(), obj.budget, m);
        let alloc = Allocation::from_counts(obj.points.clone(), counts)?;
        match bayesian_design_objective(obj, &alloc) {
            Ok(v) if v.is_finite() => Ok(Some((alloc, v))),
            Ok(_) | Err(Error::SingularInformation) | Err(Error::ZeroCount(_)) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut best: Option<(Allocation, f64)> = None;
    let mut infeasible = 0;
    for r in results {
        match r? {
            Some((a, v)) => {
                if best.as_ref().map_or(true, |(_, b)| v < *b) {
                    best = Some((a, v));
                }
            }
            None => infeasible += 1,
        }
    }
    let (allocation, objective) = best.ok_or(Error::NoFeasibleCandidate)?;
    Ok(SearchOutcome {
        allocation,
        objective,
        infeasible,
    })
}
