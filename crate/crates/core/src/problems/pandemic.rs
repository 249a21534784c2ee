//! Testing allocation in a discrete-time multi-group SIR epidemic.
//!
//! Group `k` has `N_k` people. Each day
//!
//! ```text
//! new_k = S_k · Σ_j β_kj I_j / N_k          (β = κ · θ)
//! S_k  ← S_k − new_k
//! I_k  ← I_k + new_k − (γ + x_k) I_k
//! R_k  ← R_k + (γ + x_k) I_k
//! ```
//!
//! where `x_k` is the per-capita testing rate of group `k`. Testing is limited
//! by `Σ_k N_k x_k ≤ T`, which the decision encodes as stick-breaking shares:
//! `y₁` is the fraction of capacity given to group 1, `y₂` the fraction of the
//! remainder given to group 2, and so on, with the last group taking what is
//! left. Every `y` in the unit box is feasible.
//!
//! The parameter vector is the contact matrix `θ` flattened row-major, so
//! entry `k·G + j` is the number of group-`k` people a group-`j` infected
//! person contacts per day.

use core::f64::consts::E;

use crate::error::{invalid, Error, Result};
use crate::numerics::{cross_derivative_matrix, FdConfig, Matrix};
use crate::prelude::*;
use crate::problem::{Bound, DecisionPoint, Objective, SolverOptions};

/// Per-contact transmissibility used in the worked example.
pub const DEFAULT_KAPPA: f64 = 1.0 / 105.0;
/// Multi-start grid resolution per reparameterized coordinate.
const GRID_PER_AXIS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SirParams {
    /// `G x G` contact matrix `θ`.
    pub contacts: Matrix,
    pub kappa: f64,
    pub gamma: f64,
    pub group_sizes: Vec<f64>,
    /// Tests per day across all groups.
    pub test_capacity: f64,
    /// Number of daily steps.
    pub horizon: usize,
    pub initial_infected: Vec<f64>,
}

impl SirParams {
    /// Three groups of 1000 with the worked example's contact matrix, one
    /// initial infection in group 2, κ = 1/105, γ = 0.1, 100 tests per day and
    /// a 100-day horizon.
    pub fn worked_example() -> Self {
        Self {
            contacts: Matrix::from_rows(&[&[12.0, 10.0, 1.0], &[10.0, 8.0, 1.0], &[1.0, 1.0, 1.0]])
                .expect("static matrix"),
            kappa: DEFAULT_KAPPA,
            gamma: 0.1,
            group_sizes: vec![1000.0; 3],
            test_capacity: 100.0,
            horizon: 100,
            initial_infected: vec![0.0, 1.0, 0.0],
        }
    }

    pub fn groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.groups();
        if g < 2 {
            return Err(invalid("need at least two groups"));
        }
        self.contacts.check_square_dim(g, "contact matrix")?;
        if self.initial_infected.len() != g {
            return Err(invalid("initial_infected length must match group count"));
        }
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !self.contacts.as_slice().iter().all(|&v| nonneg(v)) {
            return Err(invalid("contacts must be non-negative"));
        }
        if !(nonneg(self.kappa) && nonneg(self.gamma) && nonneg(self.test_capacity)) {
            return Err(invalid(
                "kappa, gamma and test_capacity must be non-negative",
            ));
        }
        if !self.group_sizes.iter().all(|&n| n > 0.0 && n.is_finite()) {
            return Err(invalid("group sizes must be positive"));
        }
        if !self
            .initial_infected
            .iter()
            .zip(&self.group_sizes)
            .all(|(&i, &n)| nonneg(i) && i <= n)
        {
            return Err(invalid("initial infections must lie in [0, N_k]"));
        }
        if self.initial_infected.iter().sum::<f64>() < 1.0 {
            return Err(invalid("at least one person must start infected"));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> SirState {
        SirState {
            s: self
                .group_sizes
                .iter()
                .zip(&self.initial_infected)
                .map(|(n, i)| n - i)
                .collect(),
            i: self.initial_infected.clone(),
            r: vec![0.0; self.groups()],
        }
    }

    /// Per-capita testing rates from stick-breaking shares `y`.
    pub fn decode_testing(&self, y: &[f64]) -> Vec<f64> {
        let mut remaining = 1.0;
        let mut rates = Vec::with_capacity(self.groups());
        for (k, &n) in self.group_sizes.iter().enumerate() {
            let share = if k + 1 < self.groups() {
                let s = remaining * y[k];
                remaining *= 1.0 - y[k];
                s
            } else {
                remaining
            };
            rates.push(share * self.test_capacity / n);
        }
        rates
    }
}

/// Compartment sizes per group.
#[derive(Debug, Clone, PartialEq)]
pub struct SirState {
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

impl SirState {
    /// People who have left the susceptible compartment.
    pub fn cumulative_infections(&self, group_sizes: &[f64]) -> f64 {
        group_sizes.iter().zip(&self.s).map(|(n, s)| n - s).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SirState,
    /// Set when new infections exceeded the susceptible pool and were capped.
    pub clamped: bool,
}

fn check_rates(gamma: f64, rates: &[f64]) -> Result<()> {
    for (k, &x) in rates.iter().enumerate() {
        let removal = gamma + x;
        if !(0.0..=1.0).contains(&removal) {
            return Err(Error::UnstableStep(alloc::format!(
                "gamma + x_{k} = {removal} is outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Advances the state in place by one day; returns whether any group's new
/// infections had to be capped at its susceptible count.
fn step_in_place(
    beta: &[f64],
    sizes: &[f64],
    gamma: f64,
    rates: &[f64],
    s: &mut [f64],
    i: &mut [f64],
    r: &mut [f64],
    scratch: &mut [f64],
) -> bool {
    let g = sizes.len();
    let mut clamped = false;
    for k in 0..g {
        let force: f64 = beta[k * g..(k + 1) * g]
            .iter()
            .zip(i.iter())
            .map(|(b, inf)| b * inf)
            .sum();
        let mut new = s[k] * force / sizes[k];
        if new > s[k] {
            new = s[k];
            clamped = true;
        }
        scratch[k] = new;
    }
    for k in 0..g {
        let removed = (gamma + rates[k]) * i[k];
        s[k] -= scratch[k];
        i[k] += scratch[k] - removed;
        r[k] += removed;
    }
    clamped
}

/// One day of the discrete-time epidemic under testing rates `x`.
pub fn sir_step(state: &SirState, params: &SirParams, x: &[f64]) -> Result<StepOutcome> {
    let g = params.groups();
    if x.len() != g || state.s.len() != g {
        return Err(invalid(
            "state and testing vectors must have one entry per group",
        ));
    }
    check_rates(params.gamma, x)?;
    let beta: Vec<f64> = params
        .contacts
        .as_slice()
        .iter()
        .map(|t| params.kappa * t)
        .collect();
    let mut next = state.clone();
    let mut scratch = vec![0.0; g];
    let clamped = step_in_place(
        &beta,
        &params.group_sizes,
        params.gamma,
        x,
        &mut next.s,
        &mut next.i,
        &mut next.r,
        &mut scratch,
    );
    Ok(StepOutcome {
        state: next,
        clamped,
    })
}

/// States for days `0..=horizon` under testing rates `x` and contacts `theta`.
pub fn sir_trajectory(params: &SirParams, theta: &[f64], x: &[f64]) -> Result<Vec<SirState>> {
    let g = params.groups();
    if theta.len() != g * g || x.len() != g {
        return Err(invalid(
            "contact vector or testing rates have the wrong length",
        ));
    }
    check_rates(params.gamma, x)?;
    let beta: Vec<f64> = theta.iter().map(|t| params.kappa * t).collect();
    let mut state = params.initial_state();
    let mut scratch = vec![0.0; g];
    let mut out = Vec::with_capacity(params.horizon + 1);
    out.push(state.clone());
    for _ in 0..params.horizon {
        step_in_place(
            &beta,
            &params.group_sizes,
            params.gamma,
            x,
            &mut state.s,
            &mut state.i,
            &mut state.r,
            &mut scratch,
        );
        out.push(state.clone());
    }
    Ok(out)
}

/// Cumulative infections after `horizon` days; no allocation beyond the
/// compartment buffers.
fn cumulative_infections(params: &SirParams, theta: &[f64], rates: &[f64]) -> Result<f64> {
    check_rates(params.gamma, rates)?;
    let g = params.groups();
    let mut beta = [0.0f64; 16];
    let beta: &mut [f64] = if g * g <= 16 {
        &mut beta[..g * g]
    } else {
        return cumulative_infections_large(params, theta, rates);
    };
    for (b, t) in beta.iter_mut().zip(theta) {
        *b = params.kappa * t;
    }
    let mut buf = [0.0f64; 16];
    let (s, rest) = buf.split_at_mut(4);
    let (i, rest) = rest.split_at_mut(4);
    let (r, scratch) = rest.split_at_mut(4);
    let (s, i, r, scratch) = (&mut s[..g], &mut i[..g], &mut r[..g], &mut scratch[..g]);
    for k in 0..g {
        s[k] = params.group_sizes[k] - params.initial_infected[k];
        i[k] = params.initial_infected[k];
    }
    for _ in 0..params.horizon {
        step_in_place(
            beta,
            &params.group_sizes,
            params.gamma,
            rates,
            s,
            i,
            r,
            scratch,
        );
    }
    Ok(params
        .group_sizes
        .iter()
        .zip(s.iter())
        .map(|(n, s)| n - s)
        .sum())
}

fn cumulative_infections_large(params: &SirParams, theta: &[f64], rates: &[f64]) -> Result<f64> {
    let states = sir_trajectory(params, theta, rates)?;
    Ok(states
        .last()
        .expect("initial state")
        .cumulative_infections(&params.group_sizes))
}

/// Cumulative infections over the horizon when testing capacity is split by
/// the stick-breaking shares `y` (each in `[0, 1]`) and contacts are the
/// parameters' own matrix.
pub fn pandemic_objective(params: &SirParams, y: &[f64]) -> Result<f64> {
    if y.len() + 1 != params.groups() {
        return Err(invalid("need one share per group except the last"));
    }
    if !y.iter().all(|v| (0.0..=1.0).contains(v)) {
        return Err(invalid("testing shares must lie in [0, 1]"));
    }
    cumulative_infections(
        params,
        params.contacts.as_slice(),
        &params.decode_testing(y),
    )
}

/// Per-trace variance of one contact count, `(e − 1) θ²`, for counts drawn
/// from `Lognormal(log θ − 1/2, 1)`.
pub fn trace_variance(theta_kj: f64) -> f64 {
    (E - 1.0) * theta_kj * theta_kj
}

/// The epidemic as an [`Objective`] over stick-breaking shares `y` with
/// parameters `θ` (the flattened contact matrix).
#[derive(Debug, Clone)]
pub struct PandemicProblem {
    params: SirParams,
    bounds: Vec<Bound>,
}

impl PandemicProblem {
    pub fn new(params: SirParams) -> Result<Self> {
        params.validate()?;
        let bounds = vec![
            Bound {
                lower: 0.0,
                upper: 1.0
            };
            params.groups() - 1
        ];
        Ok(Self { params, bounds })
    }

    pub fn params(&self) -> &SirParams {
        &self.params
    }

    pub fn groups(&self) -> usize {
        self.params.groups()
    }

    /// The configured contact matrix, flattened.
    pub fn default_theta(&self) -> Vec<f64> {
        self.params.contacts.as_slice().to_vec()
    }

    /// Cumulative infection counts for days `0..=horizon`.
    pub fn cumulative_series(&self, y: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let rates = self.params.decode_testing(y);
        let states = sir_trajectory(&self.params, theta, &rates)?;
        Ok(states
            .iter()
            .map(|s| s.cumulative_infections(&self.params.group_sizes))
            .collect())
    }
}

impl Objective for PandemicProblem {
    fn label(&self) -> &str {
        "pandemic"
    }

    fn dim_x(&self) -> usize {
        self.params.groups() - 1
    }

    fn dim_theta(&self) -> usize {
        self.params.groups() * self.params.groups()
    }

    /// Finite-difference stencils may step slightly outside the unit box;
    /// the decoding extends smoothly there. Unstable rates evaluate to NaN.
    fn evaluate(&self, y: &[f64], theta: &[f64]) -> f64 {
        let rates = self.params.decode_testing(y);
        cumulative_infections(&self.params, theta, &rates).unwrap_or(f64::NAN)
    }

    fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    fn theta_in_domain(&self, theta: &[f64]) -> bool {
        theta.iter().all(|&t| t >= 0.0 && t.is_finite())
    }

    fn solver_options(&self) -> SolverOptions {
        // Infection counts are O(10²–10³), so central differences carry
        // round-off near 1e-9 relative; a wider step and looser stopping rule
        // keep the projected gradient above that floor.
        SolverOptions {
            tol: 1e-6,
            gradient_step: 1e-4,
            ..SolverOptions::default()
        }
    }

    fn starting_points(&self, _theta: &[f64]) -> Vec<Vec<f64>> {
        let axis: Vec<f64> = (0..GRID_PER_AXIS)
            .map(|i| (i as f64 + 0.5) / GRID_PER_AXIS as f64)
            .collect();
        let dims = self.dim_x();
        let total = GRID_PER_AXIS.pow(dims as u32);
        (0..total)
            .map(|mut idx| {
                (0..dims)
                    .map(|_| {
                        let v = axis[idx % GRID_PER_AXIS];
                        idx /= GRID_PER_AXIS;
                        v
                    })
                    .collect()
            })
            .collect()
    }

    fn solve(&self, theta: &[f64]) -> Result<DecisionPoint> {
        if !self.theta_in_domain(theta) {
            return Err(Error::DegenerateParameter(
                "contacts must be non-negative".into(),
            ));
        }
        let opts = self.solver_options();
        let mut best: Option<DecisionPoint> = None;
        for y0 in self.starting_points(theta) {
            let candidate = crate::problem::minimize(self, theta, &y0, opts)?;
            if best.as_ref().map_or(true, |b| candidate.value < b.value) {
                best = Some(candidate);
            }
        }
        best.ok_or_else(|| invalid("no starting points"))
    }
}

/// Per-group sensitivity `ρ_j = sqrt(Σ_ℓ Σ_k (∂²f/∂y_ℓ∂θ_kj)² σ²_kj)` with
/// `σ²_kj = (e − 1) θ_kj²`, the derivatives taken by the four-point stencil at
/// `(y*, θ)`. `Σ_j ρ_j² / M_j` is the trace criterion when group `j` receives
/// `M_j` contact traces.
pub fn pandemic_group_sensitivity(
    problem: &PandemicProblem,
    theta: &[f64],
    y_star: &[f64],
    fd: FdConfig,
) -> Result<Vec<f64>> {
    let d = cross_derivative_matrix(|y, t| problem.evaluate(y, t), y_star, theta, fd)?;
    Ok(group_sensitivity_from_d(&d, theta, problem.groups()))
}

pub(crate) fn group_sensitivity_from_d(d: &Matrix, theta: &[f64], groups: usize) -> Vec<f64> {
    (0..groups)
        .map(|j| {
            let mut sq = 0.0;
            for l in 0..d.rows() {
                for k in 0..groups {
                    let p = k * groups + j;
                    sq += d[(l, p)] * d[(l, p)] * trace_variance(theta[p]);
                }
            }
            sq.sqrt()
        })
        .collect()
}
