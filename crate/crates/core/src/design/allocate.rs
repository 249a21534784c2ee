use rand::Rng;

use crate::error::{invalid, mismatch, Error, Result};
use crate::estimation::{component_points, group_points, Allocation, DesignPoint};
use crate::numerics::StreamRng;
use crate::prelude::*;

/// Unit mass split to minimize `Σ dᵢ² σᵢ² / wᵢ`: `wᵢ ∝ |dᵢ| σᵢ`.
pub fn c_optimal_allocation(d: &[f64], sigma: &[f64]) -> Result<Allocation> {
    if d.len() != sigma.len() {
        return Err(mismatch("d and sigma differ in length"));
    }
    if sigma.iter().any(|s| !(*s >= 0.0)) || d.iter().any(|v| !v.is_finite()) {
        return Err(invalid("sigma must be non-negative and d finite"));
    }
    proportional(
        component_points(d.len()),
        d.iter().zip(sigma).map(|(d, s)| d.abs() * s).collect(),
    )
}

/// Fractions proportional to non-negative scores; unit total.
fn proportional(points: Vec<DesignPoint>, scores: Vec<f64>) -> Result<Allocation> {
    let sum: f64 = scores.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    let mut w: Vec<f64> = scores.iter().map(|s| s / sum).collect();
    // Absorb rounding so the weights sum to one exactly enough.
    let drift = 1.0 - w.iter().sum::<f64>();
    let last = w
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > w[b] { i } else { b });
    w[last] += drift;
    Allocation::from_fractions(points, w, 1)
}

/// Closed-form group allocation `M_j ≈ C ρ_j / Σ ρ`.
///
/// All groups but the last are rounded to the nearest integer and the last
/// takes the remainder. If the last group ends up empty it is given one
/// trace, taken from one of the other groups chosen by a fair draw (for three
/// groups: a coin flip between the first two). Any other empty group takes
/// one trace from the largest group.
pub fn kkt_group_allocation(rho: &[f64], budget: u64, rng: &mut StreamRng) -> Result<Allocation> {
    let g = rho.len();
    if g == 0 {
        return Err(invalid("need at least one group"));
    }
    if rho.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(invalid("sensitivities must be finite and non-negative"));
    }
    if budget < g as u64 {
        return Err(Error::BudgetTooSmall { budget, groups: g });
    }
    let sum: f64 = rho.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let c = budget as i64;
    let mut m: Vec<i64> = rho[..g - 1]
        .iter()
        .map(|r| (c as f64 * r / sum).round() as i64)
        .collect();
    m.push(c - m.iter().sum::<i64>());

    while m[g - 1] < 1 {
        let donors: Vec<usize> = (0..g - 1).filter(|&i| m[i] > 1).collect();
        let pick = donors[rng.random_range(0..donors.len())];
        m[pick] -= 1;
        m[g - 1] += 1;
    }
    for i in 0..g - 1 {
        if m[i] < 1 {
            let largest = (0..g).fold(0, |b, j| if m[j] > m[b] { j } else { b });
            m[largest] -= 1;
            m[i] += 1;
        }
    }
    Allocation::from_counts(group_points(g), m.into_iter().map(|v| v as u64).collect())
}

/// Integer counts summing to `total`: largest-remainder rounding of
/// `total · wᵢ` (ties to the lower index), then points below `floor` are
/// raised one at a time by taking from the current largest count.
pub fn round_allocation(fractional: &Allocation, total: u64, floor: u64) -> Result<Allocation> {
    let w = fractional.fractions();
    let m = w.len() as u64;
    if floor.checked_mul(m).map_or(true, |need| need > total) {
        return Err(Error::InfeasibleFloor { total, floor });
    }
    let exact: Vec<f64> = w.iter().map(|wi| wi * total as f64).collect();
    let mut counts: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(assigned);
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    for i in 0..counts.len() {
        while counts[i] < floor {
            let largest =
                (0..counts.len()).fold(0, |b, j| if counts[j] > counts[b] { j } else { b });
            counts[largest] -= 1;
            counts[i] += 1;
        }
    }
    Allocation::from_counts(fractional.points().to_vec(), counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn counts(a: &Allocation) -> Vec<u64> {
        a.counts().unwrap().to_vec()
    }

    #[test]
    fn c_optimal_quadratic() {
        let a = c_optimal_allocation(&[1.0, -2.0], &[1.0, 3f64.sqrt()]).unwrap();
        let w = a.fractions();
        let s = 1.0 + 2.0 * 3f64.sqrt();
        assert!((w[0] - 1.0 / s).abs() < 1e-15 && (w[1] - 2.0 * 3f64.sqrt() / s).abs() < 1e-15);
        // Grid oracle over w ∈ {0.001, …, 0.999}.
        let obj = |w: f64| 1.0 / w + 12.0 / (1.0 - w);
        let best = (1..1000)
            .map(|k| k as f64 / 1000.0)
            .fold(f64::INFINITY, |b, w| b.min(obj(w)));
        assert!(obj(w[0]) <= best + 1e-12);
    }

    #[test]
    fn c_optimal_degenerate_cases() {
        assert_eq!(
            c_optimal_allocation(&[1.0, 0.0], &[1.0, 1.0])
                .unwrap()
                .fractions(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            c_optimal_allocation(&[1.0, 1.0], &[1.0, 1.0])
                .unwrap()
                .fractions(),
            vec![0.5, 0.5]
        );
        assert_eq!(
            c_optimal_allocation(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::DegenerateDirection)
        );
    }

    #[test]
    fn kkt_examples() {
        let mut rng = RngStream::new(0, 0).rng();
        assert_eq!(
            counts(&kkt_group_allocation(&[1.0, 1.0, 1.0], 9, &mut rng).unwrap()),
            vec![3, 3, 3]
        );
        let mut seen = [false; 2];
        for s in 0..64 {
            let mut rng = RngStream::new(s, 0).rng();
            let c = counts(&kkt_group_allocation(&[10.0, 10.0, 1e-4], 10, &mut rng).unwrap());
            assert_eq!(c[2], 1);
            assert!(c == vec![5, 4, 1] || c == vec![4, 5, 1]);
            seen[usize::from(c[0] == 4)] = true;
        }
        assert!(seen[0] && seen[1], "both coin outcomes occur");
    }

    #[test]
    fn kkt_budget_too_small() {
        let mut rng = RngStream::new(0, 0).rng();
        assert_eq!(
            kkt_group_allocation(&[1.0, 1.0, 1.0], 2, &mut rng),
            Err(Error::BudgetTooSmall {
                budget: 2,
                groups: 3
            })
        );
    }

    #[test]
    fn kkt_rounding_overshoot() {
        // Both leading groups round up past the budget.
        let mut rng = RngStream::new(0, 0).rng();
        let c = counts(&kkt_group_allocation(&[1.0, 1.0, 0.0], 3, &mut rng).unwrap());
        assert_eq!(c.iter().sum::<u64>(), 3);
        assert!(c.iter().all(|&v| v >= 1));
    }

    #[test]
    fn rounding_examples() {
        let pts = component_points(2);
        let a = Allocation::from_fractions(pts, vec![0.224, 0.776], 1).unwrap();
        assert_eq!(counts(&round_allocation(&a, 100, 0).unwrap()), vec![22, 78]);
        let a = Allocation::from_fractions(
            component_points(3),
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0],
            1,
        )
        .unwrap();
        assert_eq!(counts(&round_allocation(&a, 9, 1).unwrap()), vec![3, 3, 3]);
        let a =
            Allocation::from_fractions(component_points(3), vec![0.998, 0.001, 0.001], 1).unwrap();
        assert_eq!(counts(&round_allocation(&a, 10, 1).unwrap()), vec![8, 1, 1]);
        assert_eq!(
            round_allocation(&a, 2, 1),
            Err(Error::InfeasibleFloor { total: 2, floor: 1 })
        );
    }
}
