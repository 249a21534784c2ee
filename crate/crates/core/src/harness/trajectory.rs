use super::regret::{is_replication_failure, NamedAllocation, MAX_DISCARD_FRACTION};
use crate::design::{draw_valid, Prior};
use crate::error::{invalid, Error, Result};
use crate::estimation::{simulate_estimate, CovarianceModel};
use crate::numerics::{Executor, RngStream};
use crate::prelude::*;
use crate::problem::Objective;
use crate::problems::PandemicProblem;

/// Per-day quartiles of cumulative infections.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBand {
    pub name: String,
    pub q25: Vec<f64>,
    pub q50: Vec<f64>,
    pub q75: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBands {
    pub bands: Vec<QuantileBand>,
    pub draws: usize,
    pub discarded: usize,
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// For each prior draw `θ*` and each allocation: simulate traces, estimate
/// `θ̂`, choose testing `ŷ = y*(θ̂)`, and record the epidemic under `θ*`
/// with testing `ŷ`. Returns per-day quartiles across draws. Draws use the
/// same stream layout as the regret harness.
pub fn trajectory_quantiles<E: Executor>(
    problem: &PandemicProblem,
    cov_model: &CovarianceModel,
    prior: &Prior,
    allocations: &[NamedAllocation],
    draws: usize,
    stream: RngStream,
    exec: &E,
) -> Result<TrajectoryBands> {
    if draws < 4 {
        return Err(invalid("need at least four draws for quartiles"));
    }
    if allocations.is_empty() {
        return Err(invalid("need at least one allocation"));
    }
    let rows = exec.map(draws, |r| -> Result<Option<Vec<Vec<f64>>>> {
        let rep = stream.child(r as u64);
        let star = draw_valid(problem, prior, rep.child(0))?;
        let noise = rep.child(1);
        let mut out = Vec::with_capacity(allocations.len());
        for a in allocations {
            let attempt = (|| {
                let theta_hat = simulate_estimate(cov_model, &a.allocation, &star.theta, noise)?;
                if !problem.theta_in_domain(&theta_hat) {
                    return Err(Error::DegenerateParameter(
                        "estimate left the parameter domain".into(),
                    ));
                }
                let y_hat = problem.solve(&theta_hat)?.x;
                problem.cumulative_series(&y_hat, &star.theta)
            })();
            match attempt {
                Ok(series) => out.push(series),
                Err(e) if is_replication_failure(&e) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(out))
    });
    let mut per_alloc: Vec<Vec<Vec<f64>>> = vec![Vec::new(); allocations.len()];
    let mut discarded = 0;
    for row in rows {
        match row? {
            Some(series) => series
                .into_iter()
                .zip(per_alloc.iter_mut())
                .for_each(|(s, acc)| acc.push(s)),
            None => discarded += 1,
        }
    }
    if discarded as f64 > MAX_DISCARD_FRACTION * draws as f64 {
        return Err(Error::TooManyDiscards {
            discarded,
            replications: draws,
        });
    }
    let days = problem.params().horizon + 1;
    let bands = allocations
        .iter()
        .zip(per_alloc)
        .map(|(a, runs)| {
            let mut band = QuantileBand {
                name: a.name.clone(),
                q25: Vec::with_capacity(days),
                q50: Vec::with_capacity(days),
                q75: Vec::with_capacity(days),
            };
            let mut column = Vec::with_capacity(runs.len());
            for t in 0..days {
                column.clear();
                column.extend(runs.iter().map(|s| s[t]));
                column.sort_by(f64::total_cmp);
                band.q25.push(quantile_sorted(&column, 0.25));
                band.q50.push(quantile_sorted(&column, 0.5));
                band.q75.push(quantile_sorted(&column, 0.75));
            }
            band
        })
        .collect();
    Ok(TrajectoryBands {
        bands,
        draws: draws - discarded,
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
    }
}
