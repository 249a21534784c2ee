use crate::error::{invalid, Error, Result};
use crate::numerics::central_derivatives_1d;

const INV_PHI: f64 = 0.618_033_988_749_894_8;
const MAX_NEWTON: usize = 50;

/// Minimizes a unimodal scalar function on `[lo, hi]`.
///
/// Golden-section search narrows the bracket, then Newton steps on the
/// central-difference derivative polish the point until `|g'(x)| <= tol`.
pub fn minimize_1d<G>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("bracket requires finite lo < hi"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let width = hi - lo;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-7 * width {
        if !(gc.is_finite() && gd.is_finite()) {
            return Err(Error::NonFiniteEvaluation);
        }
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    let mut x = 0.5 * (a + b);
    let h = |x: f64| 1e-5 * x.abs().max(1.0);

    let edge = 1e-5 * width;
    let (slope, _) = central_derivatives_1d(&g, x, h(x))?;
    if (x - lo < edge && slope > 0.0) || (hi - x < edge && slope < 0.0) {
        return Err(Error::NoInteriorMinimum(x));
    }

    for _ in 0..MAX_NEWTON {
        let (d1, d2) = central_derivatives_1d(&g, x, h(x))?;
        if d1.abs() <= tol {
            return Ok(x);
        }
        if !(d2 > 0.0) {
            break;
        }
        let next = (x - d1 / d2).max(lo).min(hi);
        if next == x {
            break;
        }
        x = next;
    }
    let (d1, _) = central_derivatives_1d(&g, x, h(x))?;
    if d1.abs() <= tol {
        Ok(x)
    } else if x - lo < edge || hi - x < edge {
        Err(Error::NoInteriorMinimum(x))
    } else {
        Err(Error::NotConverged(d1.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_parabola() {
        let x = minimize_1d(|x| (x - 3.0) * (x - 3.0), 0.0, 10.0, 1e-10).unwrap();
        assert!((x - 3.0).abs() < 1e-10, "{x}");
    }

    #[test]
    fn boundary_minimum() {
        assert!(matches!(
            minimize_1d(|x| x, 0.0, 1.0, 1e-8),
            Err(Error::NoInteriorMinimum(_))
        ));
        assert!(matches!(
            minimize_1d(|x| -x, 0.0, 1.0, 1e-8),
            Err(Error::NoInteriorMinimum(_))
        ));
    }

    #[test]
    fn bad_bracket() {
        assert!(minimize_1d(|x| x * x, 1.0, 1.0, 1e-8).is_err());
        assert!(minimize_1d(|x| x * x, 0.0, f64::INFINITY, 1e-8).is_err());
    }

    #[test]
    fn non_quadratic_interior() {
        // Minimum of cosh(x - 1.5) + 0.1 x^4 found by bisection on the derivative.
        let g = |x: f64| libm::cosh(x - 1.5) + 0.1 * x.powi(4);
        let dg = |x: f64| libm::sinh(x - 1.5) + 0.4 * x.powi(3);
        let (mut a, mut b) = (0.0, 3.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if dg(m) > 0.0 {
                b = m
            } else {
                a = m
            }
        }
        let x = minimize_1d(g, -5.0, 5.0, 1e-9).unwrap();
        assert!((x - 0.5 * (a + b)).abs() < 1e-8);
    }
}
