use super::allocation::{Allocation, DesignPoint};
use super::logistic::{fit_pooled, logistic_information, PooledData};
use crate::error::{invalid, mismatch, Error, Result};
use crate::numerics::rng::{sample_normal, sample_standard_normal, sample_unit};
use crate::numerics::{Matrix, RngStream};
use crate::prelude::*;
use crate::problems::{conversion, trace_variance};

/// Maps an allocation to the covariance of `θ̂ − θ`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceModel {
    /// Component `i` is the mean of `N_i` draws from `N(θ_i, σ_i²)`.
    DiagonalMean { sigma: Vec<f64> },
    /// `θ̂` is the logistic MLE from conversions at the allocated prices.
    LogisticMle,
    /// `θ̂_kj` is the mean of `M_j` draws from `Lognormal(log θ_kj − 1/2, 1)`,
    /// one per contact trace of a group-`j` infected person.
    LognormalGroupMean { groups: usize },
}

impl CovarianceModel {
    pub fn dim_theta(&self) -> usize {
        match self {
            Self::DiagonalMean { sigma } => sigma.len(),
            Self::LogisticMle => 2,
            Self::LognormalGroupMean { groups } => groups * groups,
        }
    }

    /// Whether `Σ / n` is diagonal with entry `i` depending on one point's
    /// count; such models admit closed-form allocations.
    pub fn is_diagonal(&self) -> bool {
        !matches!(self, Self::LogisticMle)
    }
}

fn component_index(point: &DesignPoint, dim: usize, pos: usize) -> Result<usize> {
    match *point {
        DesignPoint::Component(i) if i < dim => Ok(i),
        _ => Err(invalid(alloc::format!(
            "design point {pos} is not a component below {dim}"
        ))),
    }
}

fn group_index(point: &DesignPoint, groups: usize, pos: usize) -> Result<usize> {
    match *point {
        DesignPoint::Group(j) if j < groups => Ok(j),
        _ => Err(invalid(alloc::format!(
            "design point {pos} is not a group below {groups}"
        ))),
    }
}

fn price_of(point: &DesignPoint, pos: usize) -> Result<f64> {
    match *point {
        DesignPoint::Price(x) => Ok(x),
        _ => Err(invalid(alloc::format!("design point {pos} is not a price"))),
    }
}

fn check_theta(model: &CovarianceModel, theta: &[f64]) -> Result<()> {
    if theta.len() != model.dim_theta() {
        return Err(mismatch(alloc::format!(
            "model has {} parameters, got {}",
            model.dim_theta(),
            theta.len()
        )));
    }
    Ok(())
}

/// Per-parameter variances of a diagonal model, `v_p / count`, summed over
/// the design points that measure parameter `p`.
fn diagonal_entries(
    model: &CovarianceModel,
    alloc: &Allocation,
    theta: &[f64],
) -> Result<Vec<f64>> {
    let counts = alloc.effective_counts();
    match model {
        CovarianceModel::DiagonalMean { sigma } => {
            let mut n = vec![0.0; sigma.len()];
            for (pos, (p, c)) in alloc.points().iter().zip(&counts).enumerate() {
                n[component_index(p, sigma.len(), pos)?] += c;
            }
            sigma
                .iter()
                .zip(&n)
                .enumerate()
                .map(|(i, (&s, &ni))| per_count(s * s, ni, i))
                .collect()
        }
        CovarianceModel::LognormalGroupMean { groups } => {
            let g = *groups;
            let mut m = vec![0.0; g];
            for (pos, (p, c)) in alloc.points().iter().zip(&counts).enumerate() {
                m[group_index(p, g, pos)?] += c;
            }
            (0..g * g)
                .map(|idx| per_count(trace_variance(theta[idx]), m[idx % g], idx % g))
                .collect()
        }
        CovarianceModel::LogisticMle => unreachable!("logistic model has no diagonal form"),
    }
}

fn per_count(variance: f64, count: f64, point: usize) -> Result<f64> {
    if variance == 0.0 {
        Ok(0.0)
    } else if count > 0.0 {
        Ok(variance / count)
    } else {
        Err(Error::ZeroCount(point))
    }
}

/// Covariance of `θ̂ − θ` under `alloc` when the truth is `θ`.
///
/// Fractional allocations are read as `total · w` samples per point.
pub fn covariance(model: &CovarianceModel, alloc: &Allocation, theta: &[f64]) -> Result<Matrix> {
    check_theta(model, theta)?;
    match model {
        CovarianceModel::LogisticMle => logistic_covariance(alloc, theta),
        _ => Ok(Matrix::from_diagonal(&diagonal_entries(
            model, alloc, theta,
        )?)),
    }
}

/// `Tr(D Σ Dᵀ)` without forming `Σ`: diagonal models reduce to
/// `Σ_p ‖D_{·p}‖² Σ_pp`.
pub fn trace_criterion(
    model: &CovarianceModel,
    alloc: &Allocation,
    theta: &[f64],
    d: &Matrix,
) -> Result<f64> {
    check_theta(model, theta)?;
    if d.cols() != model.dim_theta() {
        return Err(mismatch("D columns must match the parameter count"));
    }
    match model {
        CovarianceModel::LogisticMle => {
            Ok(d.sandwich(&logistic_covariance(alloc, theta)?)?.trace())
        }
        _ => {
            let diag = diagonal_entries(model, alloc, theta)?;
            let mut total = 0.0;
            for r in 0..d.rows() {
                for (p, v) in diag.iter().enumerate() {
                    total += d[(r, p)] * d[(r, p)] * v;
                }
            }
            Ok(total)
        }
    }
}

/// For diagonal models, `Tr(D Σ Dᵀ) = Σ_j s_j / n_j` where `n_j` is the
/// count at design point `j`. Returns the `s_j`: the squared columns of `D`
/// for the parameters point `j` measures, weighted by their per-sample
/// variances.
pub fn point_sensitivities(
    model: &CovarianceModel,
    points: &[DesignPoint],
    theta: &[f64],
    d: &Matrix,
) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    if d.cols() != model.dim_theta() {
        return Err(mismatch("D columns must match the parameter count"));
    }
    let col_weight = |p: usize, var: f64| -> f64 {
        (0..d.rows()).map(|r| d[(r, p)] * d[(r, p)]).sum::<f64>() * var
    };
    let mut seen = vec![false; model.dim_theta()];
    let mut claim = |p: usize| -> Result<()> {
        if core::mem::replace(&mut seen[p], true) {
            return Err(invalid(
                "each parameter must be measured by exactly one design point",
            ));
        }
        Ok(())
    };
    let mut out = Vec::with_capacity(points.len());
    match model {
        CovarianceModel::DiagonalMean { sigma } => {
            for (pos, p) in points.iter().enumerate() {
                let i = component_index(p, sigma.len(), pos)?;
                claim(i)?;
                out.push(col_weight(i, sigma[i] * sigma[i]));
            }
        }
        CovarianceModel::LognormalGroupMean { groups } => {
            let g = *groups;
            for (pos, p) in points.iter().enumerate() {
                let j = group_index(p, g, pos)?;
                let mut total = 0.0;
                for k in 0..g {
                    claim(k * g + j)?;
                    total += col_weight(k * g + j, trace_variance(theta[k * g + j]));
                }
                out.push(total);
            }
        }
        CovarianceModel::LogisticMle => {
            return Err(invalid(
                "the logistic model does not separate by design point",
            ));
        }
    }
    Ok(out)
}

fn logistic_covariance(alloc: &Allocation, theta: &[f64]) -> Result<Matrix> {
    let prices = alloc
        .points()
        .iter()
        .enumerate()
        .map(|(pos, p)| price_of(p, pos))
        .collect::<Result<Vec<_>>>()?;
    let counts = alloc.effective_counts();
    let mut distinct: Vec<f64> = prices
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&x, _)| x)
        .collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::SingularInformation);
    }
    logistic_information(&prices, &counts, theta).spd_inverse()
}

/// One draw of `θ̂` from the model's data-generating process.
///
/// Each design point reads from its own child of `stream`, so two
/// allocations over the same points share their leading samples.
pub fn simulate_estimate(
    model: &CovarianceModel,
    alloc: &Allocation,
    theta: &[f64],
    stream: RngStream,
) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    let counts = alloc
        .counts()
        .ok_or_else(|| invalid("simulation needs an integer allocation"))?;
    match model {
        CovarianceModel::DiagonalMean { sigma } => {
            let dim = sigma.len();
            let mut sums = vec![0.0; dim];
            let mut n = vec![0u64; dim];
            for (pos, (p, &c)) in alloc.points().iter().zip(counts).enumerate() {
                let i = component_index(p, dim, pos)?;
                let mut rng = stream.child(pos as u64).rng();
                for _ in 0..c {
                    sums[i] += sample_normal(&mut rng, theta[i], sigma[i])?;
                }
                n[i] += c;
            }
            (0..dim)
                .map(|i| match (n[i], sigma[i] == 0.0) {
                    (_, true) => Ok(theta[i]),
                    (0, false) => Err(Error::ZeroCount(i)),
                    (k, false) => Ok(sums[i] / k as f64),
                })
                .collect()
        }
        CovarianceModel::LognormalGroupMean { groups } => {
            let g = *groups;
            let mut sums = vec![0.0; g * g];
            let mut m = vec![0u64; g];
            for (pos, (p, &c)) in alloc.points().iter().zip(counts).enumerate() {
                let j = group_index(p, g, pos)?;
                let mut rng = stream.child(pos as u64).rng();
                for _ in 0..c {
                    for k in 0..g {
                        // θ · exp(z − 1/2) is Lognormal(log θ − 1/2, 1), and 0 when θ = 0.
                        let z = sample_standard_normal(&mut rng);
                        sums[k * g + j] += theta[k * g + j] * (z - 0.5).exp();
                    }
                }
                m[j] += c;
            }
            (0..g * g)
                .map(|idx| {
                    let j = idx % g;
                    match (m[j], theta[idx] == 0.0) {
                        (_, true) => Ok(0.0),
                        (0, false) => Err(Error::ZeroCount(j)),
                        (k, false) => Ok(sums[idx] / k as f64),
                    }
                })
                .collect()
        }
        CovarianceModel::LogisticMle => {
            let mut prices = Vec::with_capacity(alloc.len());
            let mut successes = Vec::with_capacity(alloc.len());
            for (pos, (p, &c)) in alloc.points().iter().zip(counts).enumerate() {
                let x = price_of(p, pos)?;
                let prob = conversion(x, theta);
                let mut rng = stream.child(pos as u64).rng();
                successes.push((0..c).filter(|_| sample_unit(&mut rng) < prob).count() as u64);
                prices.push(x);
            }
            let data = PooledData::from_cells(&prices, counts, &successes)?;
            Ok(fit_pooled(&data)?.theta_hat.to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{component_points, group_points, price_points};
    use core::f64::consts::E;

    #[test]
    fn diagonal_covariance() {
        let model = CovarianceModel::DiagonalMean {
            sigma: vec![1.0, 3f64.sqrt()],
        };
        let alloc = Allocation::from_counts(component_points(2), vec![50, 50]).unwrap();
        let cov = covariance(&model, &alloc, &[10.0, 5.0]).unwrap();
        assert!((cov[(0, 0)] - 0.02).abs() < 1e-15);
        assert!((cov[(1, 1)] - 0.06).abs() < 1e-15);
        assert_eq!(cov[(0, 1)], 0.0);
    }

    #[test]
    fn zero_count_is_an_error_only_with_noise() {
        let model = CovarianceModel::DiagonalMean {
            sigma: vec![1.0, 0.0],
        };
        let alloc = Allocation::from_counts(component_points(2), vec![0, 10]).unwrap();
        assert_eq!(
            covariance(&model, &alloc, &[0.0, 0.0]),
            Err(Error::ZeroCount(0))
        );
        let alloc = Allocation::from_counts(component_points(2), vec![10, 0]).unwrap();
        assert!(covariance(&model, &alloc, &[0.0, 0.0]).is_ok());
    }

    #[test]
    fn single_price_is_singular() {
        let alloc =
            Allocation::from_counts(price_points(&[0.0, 1.0, 2.0]), vec![0, 100, 0]).unwrap();
        assert_eq!(
            covariance(&CovarianceModel::LogisticMle, &alloc, &[-4.0, 1.0]),
            Err(Error::SingularInformation)
        );
    }

    #[test]
    fn lognormal_entry() {
        let model = CovarianceModel::LognormalGroupMean { groups: 3 };
        let alloc = Allocation::from_counts(group_points(3), vec![16, 16, 16]).unwrap();
        let cov = covariance(&model, &alloc, &[4.0; 9]).unwrap();
        // (e^{σ²} − 1) e^{2μ + σ²} with μ = log 4 − 1/2, σ = 1, over 16 traces.
        let mu = 4f64.ln() - 0.5;
        let oracle = (E - 1.0) * (2.0 * mu + 1.0).exp() / 16.0;
        assert!((cov[(4, 4)] - oracle).abs() < 1e-12);
        assert!((cov[(4, 4)] - (E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn trace_criterion_matches_sandwich() {
        let model = CovarianceModel::LognormalGroupMean { groups: 2 };
        let alloc = Allocation::from_counts(group_points(2), vec![3, 7]).unwrap();
        let theta = [2.0, 1.0, 0.5, 3.0];
        let d = Matrix::from_rows(&[&[1.0, -2.0, 0.5, 0.25]]).unwrap();
        let direct = d
            .sandwich(&covariance(&model, &alloc, &theta).unwrap())
            .unwrap()
            .trace();
        let fast = trace_criterion(&model, &alloc, &theta, &d).unwrap();
        assert!((direct - fast).abs() < 1e-14);
    }

    #[test]
    fn sensitivities_reproduce_the_trace() {
        let model = CovarianceModel::LognormalGroupMean { groups: 2 };
        let points = group_points(2);
        let theta = [2.0, 1.0, 0.5, 3.0];
        let d = Matrix::from_rows(&[&[1.0, -2.0, 0.5, 0.25], &[0.3, 0.0, -1.0, 2.0]]).unwrap();
        let s = point_sensitivities(&model, &points, &theta, &d).unwrap();
        let alloc = Allocation::from_counts(points, vec![3, 7]).unwrap();
        let trace = trace_criterion(&model, &alloc, &theta, &d).unwrap();
        assert!((s[0] / 3.0 + s[1] / 7.0 - trace).abs() < 1e-13);
    }

    #[test]
    fn zero_noise_reproduces_theta() {
        let model = CovarianceModel::DiagonalMean {
            sigma: vec![0.0, 0.0],
        };
        let alloc = Allocation::from_counts(component_points(2), vec![3, 4]).unwrap();
        let est = simulate_estimate(&model, &alloc, &[10.0, 5.0], RngStream::new(1, 2)).unwrap();
        assert_eq!(est, vec![10.0, 5.0]);
    }

    #[test]
    fn fractional_allocation_cannot_be_simulated() {
        let model = CovarianceModel::DiagonalMean { sigma: vec![1.0] };
        let alloc = Allocation::from_fractions(component_points(1), vec![1.0], 10).unwrap();
        assert!(simulate_estimate(&model, &alloc, &[0.0], RngStream::new(0, 0)).is_err());
    }
}
