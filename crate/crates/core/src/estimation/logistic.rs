//! Maximum likelihood for `P(convert | x) = 1 / (1 + exp(θ₀ + θ₁ x))`.

use crate::error::{invalid, mismatch, Error, Result};
use crate::numerics::Matrix;
use crate::prelude::*;
use crate::problems::conversion;

/// Beyond this parameter norm the likelihood is flat to machine precision.
pub const SEPARATION_NORM: f64 = 50.0;
const GRADIENT_TOL: f64 = 1e-10;
const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: [f64; 2],
    /// Score norm reached `1e-10`.
    pub converged: bool,
    pub iterations: usize,
    /// `XᵀWX` at `θ̂`.
    pub info_matrix: Matrix,
}

/// Observations pooled by price: `(price, trials, conversions)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledData {
    cells: Vec<(f64, f64, f64)>,
}

impl PooledData {
    pub fn from_observations(prices: &[f64], conversions: &[bool]) -> Result<Self> {
        if prices.len() != conversions.len() {
            return Err(mismatch(alloc::format!(
                "{} prices but {} outcomes",
                prices.len(),
                conversions.len()
            )));
        }
        if prices.iter().any(|p| !p.is_finite()) {
            return Err(invalid("prices must be finite"));
        }
        let mut order: Vec<usize> = (0..prices.len()).collect();
        order.sort_by(|&a, &b| prices[a].total_cmp(&prices[b]));
        let mut cells: Vec<(f64, f64, f64)> = Vec::new();
        for i in order {
            let s = if conversions[i] { 1.0 } else { 0.0 };
            match cells.last_mut() {
                Some(cell) if cell.0 == prices[i] => {
                    cell.1 += 1.0;
                    cell.2 += s;
                }
                _ => cells.push((prices[i], 1.0, s)),
            }
        }
        Ok(Self { cells })
    }

    /// Builds cells directly; `successes[i] <= trials[i]`.
    pub fn from_cells(prices: &[f64], trials: &[u64], successes: &[u64]) -> Result<Self> {
        if prices.len() != trials.len() || prices.len() != successes.len() {
            return Err(mismatch("prices, trials and successes differ in length"));
        }
        let mut obs_prices = Vec::new();
        let mut obs = Vec::new();
        for ((&p, &n), &s) in prices.iter().zip(trials).zip(successes) {
            if s > n {
                return Err(invalid("more conversions than trials"));
            }
            for k in 0..n {
                obs_prices.push(p);
                obs.push(k < s);
            }
        }
        Self::from_observations(&obs_prices, &obs)
    }

    pub fn trials(&self) -> f64 {
        self.cells.iter().map(|c| c.1).sum()
    }

    /// Whether some price threshold splits converters from non-converters,
    /// in which case no finite maximizer exists.
    pub fn is_separated(&self) -> bool {
        let mut max_success = f64::NEG_INFINITY;
        let mut min_success = f64::INFINITY;
        let mut max_failure = f64::NEG_INFINITY;
        let mut min_failure = f64::INFINITY;
        for &(x, n, s) in &self.cells {
            if s > 0.0 {
                max_success = max_success.max(x);
                min_success = min_success.min(x);
            }
            if n - s > 0.0 {
                max_failure = max_failure.max(x);
                min_failure = min_failure.min(x);
            }
        }
        max_success <= min_failure || max_failure <= min_success
    }

    fn log_likelihood(&self, theta: &[f64; 2]) -> f64 {
        // log c = −softplus(z), log(1 − c) = −softplus(−z).
        self.cells
            .iter()
            .map(|&(x, n, s)| {
                let z = theta[0] + theta[1] * x;
                -s * softplus(z) - (n - s) * softplus(-z)
            })
            .sum()
    }

    /// `g = ∇ℓ = Σ (n c − s)(1, x)` and `I = −∇²ℓ = XᵀWX`.
    fn score_and_information(&self, theta: &[f64; 2]) -> ([f64; 2], Matrix) {
        let mut g = [0.0; 2];
        let mut info = [0.0; 3];
        for &(x, n, s) in &self.cells {
            let c = conversion(x, theta);
            let r = n * c - s;
            g[0] += r;
            g[1] += r * x;
            let w = n * c * (1.0 - c);
            info[0] += w;
            info[1] += w * x;
            info[2] += w * x * x;
        }
        let m = Matrix::from_rows(&[&[info[0], info[1]], &[info[1], info[2]]])
            .unwrap_or_else(|_| Matrix::zeros(2, 2));
        (g, m)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Newton–Raphson with step halving from `θ = 0`.
pub fn fit_logistic_mle(prices: &[f64], conversions: &[bool]) -> Result<FitResult> {
    if prices.len() < 2 {
        return Err(invalid("need at least two observations"));
    }
    fit_pooled(&PooledData::from_observations(prices, conversions)?)
}

pub fn fit_pooled(data: &PooledData) -> Result<FitResult> {
    if data.cells.len() < 2 {
        return Err(Error::RankDeficient);
    }
    if data.is_separated() {
        return Err(Error::SeparationDetected);
    }
    let mut theta = [0.0f64; 2];
    let mut ll = data.log_likelihood(&theta);
    let mut iterations = 0;
    loop {
        let (g, info) = data.score_and_information(&theta);
        let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gnorm <= GRADIENT_TOL || iterations >= MAX_ITER {
            return Ok(FitResult {
                theta_hat: theta,
                converged: gnorm <= GRADIENT_TOL,
                iterations,
                info_matrix: info,
            });
        }
        let inv = info.spd_inverse().map_err(|_| Error::SeparationDetected)?;
        // ∇ℓ = g and ∇²ℓ = −I, so the Newton step is I⁻¹ g.
        let step = [
            inv[(0, 0)] * g[0] + inv[(0, 1)] * g[1],
            inv[(1, 0)] * g[0] + inv[(1, 1)] * g[1],
        ];
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = [theta[0] + t * step[0], theta[1] + t * step[1]];
            let ll_trial = data.log_likelihood(&trial);
            if ll_trial >= ll {
                theta = trial;
                ll = ll_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if (theta[0] * theta[0] + theta[1] * theta[1]).sqrt() > SEPARATION_NORM {
            return Err(Error::SeparationDetected);
        }
        if !accepted {
            // No representable improvement: the iterate is at the maximizer
            // to working precision.
            let (g, info) = data.score_and_information(&theta);
            let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
            return Ok(FitResult {
                theta_hat: theta,
                converged: gnorm <= GRADIENT_TOL,
                iterations,
                info_matrix: info,
            });
        }
    }
}

/// `XᵀWX` for `counts[i]` customers at `prices[i]` under `θ`.
pub fn logistic_information(prices: &[f64], counts: &[f64], theta: &[f64]) -> Matrix {
    let mut info = [0.0; 3];
    for (&x, &n) in prices.iter().zip(counts) {
        let c = conversion(x, theta);
        let w = n * c * (1.0 - c);
        info[0] += w;
        info[1] += w * x;
        info[2] += w * x * x;
    }
    Matrix::from_rows(&[&[info[0], info[1]], &[info[1], info[2]]])
        .unwrap_or_else(|_| Matrix::zeros(2, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_data_is_separated() {
        let prices: Vec<f64> = (0..10).map(f64::from).collect();
        let conv: Vec<bool> = prices.iter().map(|&p| p < 5.0).collect();
        assert_eq!(
            fit_logistic_mle(&prices, &conv),
            Err(Error::SeparationDetected)
        );
        assert_eq!(
            fit_logistic_mle(&[0.0, 1.0], &[true, false]),
            Err(Error::SeparationDetected)
        );
    }

    #[test]
    fn single_price_is_rank_deficient() {
        assert_eq!(
            fit_logistic_mle(&[3.0, 3.0, 3.0], &[true, false, true]),
            Err(Error::RankDeficient)
        );
    }

    #[test]
    fn two_price_saturated_fit() {
        // With two prices the MLE reproduces the empirical rates exactly.
        let data = PooledData::from_cells(&[0.0, 1.0], &[10, 10], &[8, 3]).unwrap();
        let fit = fit_pooled(&data).unwrap();
        assert!(fit.converged);
        assert!((conversion(0.0, &fit.theta_hat) - 0.8).abs() < 1e-12);
        assert!((conversion(1.0, &fit.theta_hat) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn quasi_separation_is_detected() {
        // Everything below 1 converts, nothing above it does.
        let data = PooledData::from_cells(&[0.0, 1.0, 2.0], &[5, 5, 5], &[5, 2, 0]).unwrap();
        assert!(data.is_separated());
    }

    #[test]
    fn overlap_is_not_separation() {
        let data = PooledData::from_cells(&[0.0, 1.0, 2.0], &[5, 5, 5], &[4, 2, 1]).unwrap();
        assert!(!data.is_separated());
        assert!(fit_pooled(&data).unwrap().converged);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert!((softplus(0.0) - core::f64::consts::LN_2).abs() < 1e-15);
    }
}
