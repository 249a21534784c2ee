//! JSON problem configurations.
//!
//! Every file carries `"schema_version": 1`. Unknown fields are rejected and
//! omitted fields take the worked-example defaults, so `{"schema_version": 1}`
//! is a complete configuration for each problem.
//!
//! Quadratic (`f = θ₁/2 x² + θ₀ x`, `θ_i` measured with noise `σ_i`):
//!
//! | field | default | meaning |
//! |---|---|---|
//! | `prior_mean`, `prior_cov` | `[10, 5]`, `I` | normal prior on `θ` |
//! | `sigma` | `[1, √3]` | per-sample noise of each component |
//! | `budget` | `100` | total samples |
//! | `replications` | `300` | Monte Carlo replications |
//! | `design_at` | `"prior_mean"` | closed form at the prior mean, or `"prior_average"` |
//! | `prior_draws` | `100` | draws for `"prior_average"` |
//! | `split_min` | `5` | smallest per-component count in `compare --all-splits` |
//! | `sweep_budgets` | `[100, 400]` | |
//! | `curve_points`, `curve_halfwidth` | `201`, `2` | `compare --curves` grid around `x*` |
//! | `bound` | see [`BoundConfig`] | `verify-bound` setup |
//!
//! Pricing (logistic conversion, revenue `x · c(x, θ)`):
//!
//! | field | default | meaning |
//! |---|---|---|
//! | `prior_mean`, `prior_cov` | `[-4, 1]`, `0.01 I` | normal prior on `θ` |
//! | `prices` | `[0, …, 9]` | candidate prices (`m` = their count) |
//! | `budget` | `100` | customers `n` |
//! | `replications` | `300` | |
//! | `prior_draws` | `100` | draws averaged by the design criterion |
//! | `candidates` | `1000` | random-search allocations |
//! | `sweep_budgets` | `[100, 300, 1000, 3000]` | |
//! | `curve_points`, `curve_halfwidth` | `201`, `1.5` | |
//!
//! Pandemic (multi-group SIR with testing):
//!
//! | field | default | meaning |
//! |---|---|---|
//! | `contacts` | `[[12,10,1],[10,8,1],[1,1,1]]` | contact matrix `θ`; also the gamma prior shapes |
//! | `kappa`, `gamma` | `1/105`, `0.1` | transmissibility per contact, recovery rate |
//! | `group_sizes` | `[1000, 1000, 1000]` | `N_k` |
//! | `test_capacity` | `100` | tests per day `T` |
//! | `horizon` | `100` | days |
//! | `initial_infected` | `[0, 1, 0]` | |
//! | `budget` | `10` | contact traces `C` |
//! | `replications` | `1000` | |
//! | `prior_draws` | `1000` | draws used to compute group sensitivities |
//! | `prior_scale` | `1` | gamma prior scale |
//! | `fd_step` | `1e-4` | mixed-derivative stencil step |
//! | `sweep_budgets` | `[10, 30, 100, 300]` | |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignAt {
    /// Closed-form weights for `D` at the prior mean.
    PriorMean,
    /// Weights minimizing the prior-averaged criterion.
    PriorAverage,
}

/// Deterministic-bound check: `θ̂ ~ N(θ*, noise_var · I)` for `draws` draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundConfig {
    pub theta_star: Vec<f64>,
    pub noise_var: f64,
    pub draws: usize,
    pub rho: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Region of `θ₁` the constants were derived for; draws outside it are
    /// skipped.
    pub theta1_range: [f64; 2],
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            theta_star: vec![10.0, 5.0],
            noise_var: 0.01,
            draws: 1000,
            rho: 2.0,
            beta1: 8.0,
            beta2: 0.0,
            theta1_range: [2.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraticConfig {
    /// Required; the container default does not apply.
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub prior_mean: Vec<f64>,
    pub prior_cov: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub budget: u64,
    pub replications: usize,
    pub design_at: DesignAt,
    pub prior_draws: usize,
    pub split_min: u64,
    pub sweep_budgets: Vec<u64>,
    pub curve_points: usize,
    pub curve_halfwidth: f64,
    pub bound: BoundConfig,
}

impl Default for QuadraticConfig {
    fn default() -> Self {
        Self {
            schema_version: Some(SCHEMA_VERSION),
            prior_mean: vec![10.0, 5.0],
            prior_cov: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            sigma: vec![1.0, 3f64.sqrt()],
            budget: 100,
            replications: 300,
            design_at: DesignAt::PriorMean,
            prior_draws: 100,
            split_min: 5,
            sweep_budgets: vec![100, 400],
            curve_points: 201,
            curve_halfwidth: 2.0,
            bound: BoundConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PricingConfig {
    /// Required; the container default does not apply.
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub prior_mean: Vec<f64>,
    pub prior_cov: Vec<Vec<f64>>,
    pub prices: Vec<f64>,
    pub budget: u64,
    pub replications: usize,
    pub prior_draws: usize,
    pub candidates: usize,
    pub sweep_budgets: Vec<u64>,
    pub curve_points: usize,
    pub curve_halfwidth: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            schema_version: Some(SCHEMA_VERSION),
            prior_mean: vec![-4.0, 1.0],
            prior_cov: vec![vec![0.01, 0.0], vec![0.0, 0.01]],
            prices: (0..10).map(f64::from).collect(),
            budget: 100,
            replications: 300,
            prior_draws: 100,
            candidates: 1000,
            sweep_budgets: vec![100, 300, 1000, 3000],
            curve_points: 201,
            curve_halfwidth: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PandemicConfig {
    /// Required; the container default does not apply.
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub contacts: Vec<Vec<f64>>,
    pub kappa: f64,
    pub gamma: f64,
    pub group_sizes: Vec<f64>,
    pub test_capacity: f64,
    pub horizon: usize,
    pub initial_infected: Vec<f64>,
    pub budget: u64,
    pub replications: usize,
    pub prior_draws: usize,
    pub prior_scale: f64,
    pub fd_step: f64,
    pub sweep_budgets: Vec<u64>,
}

impl Default for PandemicConfig {
    fn default() -> Self {
        Self {
            schema_version: Some(SCHEMA_VERSION),
            contacts: vec![
                vec![12.0, 10.0, 1.0],
                vec![10.0, 8.0, 1.0],
                vec![1.0, 1.0, 1.0],
            ],
            kappa: 1.0 / 105.0,
            gamma: 0.1,
            group_sizes: vec![1000.0; 3],
            test_capacity: 100.0,
            horizon: 100,
            initial_infected: vec![0.0, 1.0, 0.0],
            budget: 10,
            replications: 1000,
            prior_draws: 1000,
            prior_scale: 1.0,
            fd_step: 1e-4,
            sweep_budgets: vec![10, 30, 100, 300],
        }
    }
}

/// Parses a configuration, naming the offending field on failure.
pub fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.to_string();
        let field = if path == "." || path.is_empty() {
            backticked(&msg).unwrap_or_else(|| "<config>".into())
        } else {
            path
        };
        CliError::config(field, msg)
    })
}

/// The first `` `name` `` in a serde message, e.g. from "unknown field `x`".
fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::config("--config", format!("cannot read {}: {e}", path.display()))
    })?;
    parse(&text)
}

fn check_version(v: Option<u32>) -> Result<(), CliError> {
    match v {
        Some(SCHEMA_VERSION) => Ok(()),
        Some(other) => Err(CliError::config(
            "schema_version",
            format!("unsupported version {other}; expected {SCHEMA_VERSION}"),
        )),
        None => Err(CliError::config("schema_version", "missing")),
    }
}

fn finite(field: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::config(field, "values must be finite"))
    }
}

fn square(field: &str, m: &[Vec<f64>], n: usize) -> Result<(), CliError> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(CliError::config(
            field,
            format!("expected a {n}x{n} matrix"),
        ));
    }
    m.iter().try_for_each(|r| finite(field, r))
}

fn positive<T: PartialOrd + Default + Copy>(field: &str, v: T) -> Result<(), CliError> {
    if v > T::default() {
        Ok(())
    } else {
        Err(CliError::config(field, "must be positive"))
    }
}

fn budgets(field: &str, b: &[u64], min: u64) -> Result<(), CliError> {
    if b.len() < 2 {
        return Err(CliError::config(field, "need at least two budgets"));
    }
    if b.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config(
            field,
            "budgets must be strictly increasing",
        ));
    }
    if b[0] < min {
        return Err(CliError::config(
            field,
            format!("budgets must be at least {min}"),
        ));
    }
    Ok(())
}

impl QuadraticConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        if self.prior_mean.len() != 2 {
            return Err(CliError::config(
                "prior_mean",
                "expected 2 entries (θ₀, θ₁)",
            ));
        }
        finite("prior_mean", &self.prior_mean)?;
        square("prior_cov", &self.prior_cov, 2)?;
        if self.sigma.len() != 2 || self.sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(CliError::config("sigma", "expected 2 non-negative entries"));
        }
        if self.budget < 2 {
            return Err(CliError::config(
                "budget",
                "need at least one sample per component",
            ));
        }
        if self.replications < 2 {
            return Err(CliError::config("replications", "need at least 2"));
        }
        positive("prior_draws", self.prior_draws)?;
        if self.split_min == 0 || 2 * self.split_min > self.budget {
            return Err(CliError::config("split_min", "must lie in 1..=budget/2"));
        }
        budgets("sweep_budgets", &self.sweep_budgets, 2)?;
        if self.curve_points < 2 {
            return Err(CliError::config("curve_points", "need at least 2"));
        }
        positive("curve_halfwidth", self.curve_halfwidth)?;
        let b = &self.bound;
        if b.theta_star.len() != 2 {
            return Err(CliError::config("bound.theta_star", "expected 2 entries"));
        }
        finite("bound.theta_star", &b.theta_star)?;
        positive("bound.noise_var", b.noise_var)?;
        positive("bound.draws", b.draws)?;
        positive("bound.rho", b.rho)?;
        if !(b.beta1 >= b.rho && b.beta1.is_finite()) {
            return Err(CliError::config(
                "bound.beta1",
                "must be finite and at least rho",
            ));
        }
        if !(b.beta2 >= 0.0 && b.beta2.is_finite()) {
            return Err(CliError::config(
                "bound.beta2",
                "must be finite and non-negative",
            ));
        }
        if !(b.theta1_range[0] > 0.0 && b.theta1_range[0] <= b.theta1_range[1]) {
            return Err(CliError::config(
                "bound.theta1_range",
                "need 0 < lower <= upper",
            ));
        }
        Ok(())
    }
}

impl PricingConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        if self.prior_mean.len() != 2 {
            return Err(CliError::config(
                "prior_mean",
                "expected 2 entries (θ₀, θ₁)",
            ));
        }
        finite("prior_mean", &self.prior_mean)?;
        if !(self.prior_mean[1] > 0.0) {
            return Err(CliError::config("prior_mean", "θ₁ must be positive"));
        }
        square("prior_cov", &self.prior_cov, 2)?;
        if self.prices.len() < 2 {
            return Err(CliError::config("prices", "need at least two prices"));
        }
        finite("prices", &self.prices)?;
        if self.prices.iter().any(|p| *p < 0.0) || self.prices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config(
                "prices",
                "prices must be non-negative and strictly increasing",
            ));
        }
        if self.budget < 2 {
            return Err(CliError::config("budget", "need at least 2 customers"));
        }
        if self.replications < 2 {
            return Err(CliError::config("replications", "need at least 2"));
        }
        positive("prior_draws", self.prior_draws)?;
        positive("candidates", self.candidates)?;
        budgets("sweep_budgets", &self.sweep_budgets, 2)?;
        if self.curve_points < 2 {
            return Err(CliError::config("curve_points", "need at least 2"));
        }
        positive("curve_halfwidth", self.curve_halfwidth)?;
        Ok(())
    }
}

impl PandemicConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        let g = self.group_sizes.len();
        if g < 2 {
            return Err(CliError::config("group_sizes", "need at least two groups"));
        }
        if self
            .group_sizes
            .iter()
            .any(|n| !(*n > 0.0 && n.is_finite()))
        {
            return Err(CliError::config("group_sizes", "sizes must be positive"));
        }
        square("contacts", &self.contacts, g)?;
        if self.contacts.iter().flatten().any(|v| *v < 0.0) {
            return Err(CliError::config(
                "contacts",
                "contacts must be non-negative",
            ));
        }
        for (field, v) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("test_capacity", self.test_capacity),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::config(field, "must be finite and non-negative"));
            }
        }
        if self.gamma > 1.0 {
            return Err(CliError::config("gamma", "a daily step needs gamma <= 1"));
        }
        positive("horizon", self.horizon)?;
        if self.initial_infected.len() != g {
            return Err(CliError::config(
                "initial_infected",
                format!("expected {g} entries"),
            ));
        }
        if self
            .initial_infected
            .iter()
            .zip(&self.group_sizes)
            .any(|(i, n)| !(*i >= 0.0 && i <= n))
            || self.initial_infected.iter().sum::<f64>() < 1.0
        {
            return Err(CliError::config(
                "initial_infected",
                "entries must lie in [0, N_k] with at least one infection",
            ));
        }
        if self.budget < g as u64 {
            return Err(CliError::config(
                "budget",
                format!("need at least one trace per group ({g})"),
            ));
        }
        if self.replications < 4 {
            return Err(CliError::config("replications", "need at least 4"));
        }
        positive("prior_draws", self.prior_draws)?;
        if !(self.prior_scale > 0.0 && self.prior_scale.is_finite()) {
            return Err(CliError::config("prior_scale", "must be positive"));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(CliError::config("fd_step", "must be positive"));
        }
        budgets("sweep_budgets", &self.sweep_budgets, g as u64)?;
        Ok(())
    }
}
