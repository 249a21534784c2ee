use crate::error::{invalid, mismatch, Result};
use crate::prelude::*;

/// What one sample of an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignPoint {
    /// A direct noisy draw of parameter component `i`.
    Component(usize),
    /// One customer shown this price.
    Price(f64),
    /// One contact trace of an infected person from group `j`.
    Group(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    /// Shares of the budget, summing to one.
    Fractions(Vec<f64>),
    /// Sample counts, summing to the budget.
    Counts(Vec<u64>),
}

/// How an experiment budget is spread over design points.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    points: Vec<DesignPoint>,
    weights: Weights,
    total: u64,
}

const FRACTION_TOL: f64 = 1e-12;

impl Allocation {
    /// Integer allocation; the budget is the sum of the counts.
    pub fn from_counts(points: Vec<DesignPoint>, counts: Vec<u64>) -> Result<Self> {
        if points.len() != counts.len() {
            return Err(mismatch(alloc::format!(
                "{} design points but {} counts",
                points.len(),
                counts.len()
            )));
        }
        if points.is_empty() {
            return Err(invalid("allocation needs at least one design point"));
        }
        let total = counts.iter().sum();
        Ok(Self {
            points,
            weights: Weights::Counts(counts),
            total,
        })
    }

    /// Fractional allocation of a budget of `total` samples.
    pub fn from_fractions(
        points: Vec<DesignPoint>,
        fractions: Vec<f64>,
        total: u64,
    ) -> Result<Self> {
        if points.len() != fractions.len() {
            return Err(mismatch(alloc::format!(
                "{} design points but {} weights",
                points.len(),
                fractions.len()
            )));
        }
        if points.is_empty() {
            return Err(invalid("allocation needs at least one design point"));
        }
        if fractions.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and non-negative"));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > FRACTION_TOL {
            return Err(invalid(alloc::format!("weights sum to {sum}, not 1")));
        }
        Ok(Self {
            points,
            weights: Weights::Fractions(fractions),
            total,
        })
    }

    /// Equal counts with the remainder handed to the leading points, e.g.
    /// 10 over three points gives `[4, 3, 3]`.
    pub fn uniform(points: Vec<DesignPoint>, total: u64) -> Result<Self> {
        let m = points.len() as u64;
        if m == 0 {
            return Err(invalid("allocation needs at least one design point"));
        }
        let counts = (0..m)
            .map(|i| total / m + u64::from(i < total % m))
            .collect();
        Self::from_counts(points, counts)
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn counts(&self) -> Option<&[u64]> {
        match &self.weights {
            Weights::Counts(c) => Some(c),
            Weights::Fractions(_) => None,
        }
    }

    /// Samples per point as reals: the counts, or `total · w` for fractions.
    pub fn effective_counts(&self) -> Vec<f64> {
        match &self.weights {
            Weights::Counts(c) => c.iter().map(|&v| v as f64).collect(),
            Weights::Fractions(w) => w.iter().map(|&v| v * self.total as f64).collect(),
        }
    }

    /// Budget shares per point.
    pub fn fractions(&self) -> Vec<f64> {
        match &self.weights {
            Weights::Fractions(w) => w.clone(),
            Weights::Counts(c) => {
                let t = self.total.max(1) as f64;
                c.iter().map(|&v| v as f64 / t).collect()
            }
        }
    }

    /// The same allocation with every count multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        match &self.weights {
            Weights::Counts(c) => Self {
                points: self.points.clone(),
                weights: Weights::Counts(c.iter().map(|v| v * k).collect()),
                total: self.total * k,
            },
            Weights::Fractions(w) => Self {
                points: self.points.clone(),
                weights: Weights::Fractions(w.clone()),
                total: self.total * k,
            },
        }
    }
}

/// `Component(0..n)`.
pub fn component_points(n: usize) -> Vec<DesignPoint> {
    (0..n).map(DesignPoint::Component).collect()
}

/// `Group(0..n)`.
pub fn group_points(n: usize) -> Vec<DesignPoint> {
    (0..n).map(DesignPoint::Group).collect()
}

pub fn price_points(prices: &[f64]) -> Vec<DesignPoint> {
    prices.iter().map(|&p| DesignPoint::Price(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_gives_remainder_to_leading_points() {
        let a = Allocation::uniform(group_points(3), 10).unwrap();
        assert_eq!(a.counts().unwrap(), &[4, 3, 3]);
        assert_eq!(a.total(), 10);
    }

    #[test]
    fn fractions_must_sum_to_one() {
        assert!(Allocation::from_fractions(component_points(2), vec![0.5, 0.4], 10).is_err());
        assert!(Allocation::from_fractions(component_points(2), vec![1.5, -0.5], 10).is_err());
        let a = Allocation::from_fractions(component_points(2), vec![0.25, 0.75], 100).unwrap();
        assert_eq!(a.effective_counts(), vec![25.0, 75.0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(Allocation::from_counts(component_points(2), vec![1, 2, 3]).is_err());
    }
}
