use crate::error::{mismatch, Result};
use crate::numerics::{symmetric_eigenvalues, Matrix};

/// The allocation-dependent terms of the high-probability regret bound for
/// `A = D Σ Dᵀ / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `Tr A`.
    pub trace_term: f64,
    /// `2 √(Tr(A²) · log n)`.
    pub frobenius_term: f64,
    /// `2 ‖A‖₂ · log n`.
    pub spectral_term: f64,
    pub total: f64,
}

/// Bound terms for `n` samples with per-sample covariance `Σ`.
pub fn bound_terms(d: &Matrix, sigma: &Matrix, n: u64) -> Result<BoundReport> {
    if n == 0 {
        return Err(crate::error::invalid("n must be at least 1"));
    }
    bound_terms_scaled(d, &sigma.scaled(1.0 / n as f64), (n as f64).ln())
}

/// Bound terms for an estimator covariance `Σ / n` given directly, with
/// `log n` supplied by the caller.
pub fn bound_terms_scaled(d: &Matrix, sigma_over_n: &Matrix, log_n: f64) -> Result<BoundReport> {
    if d.cols() != sigma_over_n.rows() || !sigma_over_n.is_square() {
        return Err(mismatch(alloc::format!(
            "D is {}x{} but the covariance is {}x{}",
            d.rows(),
            d.cols(),
            sigma_over_n.rows(),
            sigma_over_n.cols()
        )));
    }
    let a = d.sandwich(sigma_over_n)?;
    let eig = symmetric_eigenvalues(&a)?;
    let trace_term = a.trace();
    let frob_sq: f64 = eig.iter().map(|l| l * l).sum();
    let spectral = eig.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let log_n = log_n.max(0.0);
    let frobenius_term = 2.0 * libm::sqrt(frob_sq * log_n);
    let spectral_term = 2.0 * spectral * log_n;
    Ok(BoundReport {
        trace_term,
        frobenius_term,
        spectral_term,
        total: trace_term + frobenius_term + spectral_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_has_no_log_terms() {
        let r = bound_terms(&Matrix::identity(2), &Matrix::identity(2), 1).unwrap();
        assert_eq!(
            (r.trace_term, r.frobenius_term, r.spectral_term),
            (2.0, 0.0, 0.0)
        );
    }

    #[test]
    fn scalar_quadratic_form() {
        let d = Matrix::row_vector(&[1.0, -2.0]);
        let s = Matrix::from_diagonal(&[1.0 / 50.0, 3.0 / 50.0]);
        let r = bound_terms(&d, &s, 1).unwrap();
        assert!((r.trace_term - 0.26).abs() < 1e-15);
    }

    #[test]
    fn unit_log() {
        let r = bound_terms_scaled(
            &Matrix::identity(2),
            &Matrix::from_diagonal(&[4.0, 1.0]),
            1.0,
        )
        .unwrap();
        assert!((r.trace_term - 5.0).abs() < 1e-12);
        assert!((r.frobenius_term - 2.0 * 17f64.sqrt()).abs() < 1e-12);
        assert!((r.spectral_term - 8.0).abs() < 1e-12);
        assert!((r.total - (13.0 + 2.0 * 17f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn mismatched_shapes() {
        assert!(bound_terms(
            &Matrix::row_vector(&[1.0, 2.0, 3.0]),
            &Matrix::identity(2),
            4
        )
        .is_err());
    }
}
