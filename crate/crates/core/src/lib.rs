//! Regret-aware experimental design for estimate-then-optimize.
//!
//! A decision `x` is chosen by minimizing a smooth structural model `f(x, θ)`
//! at an estimate `θ̂`. The regret of that decision is governed, to leading
//! order, by `Tr(D Σ Dᵀ / n)` where `D = ∂²f/∂x∂θ` at the optimum and `Σ / n`
//! is the covariance of the estimator. This crate computes `D`, minimizes the
//! trace criterion over experiment allocations, and measures the resulting
//! regret by Monte Carlo.
//!
//! The crate is `no_std` and needs only `alloc`. Parallel execution, file
//! formats and the command-line front end live in the `regret-design` crate.

#![no_std]

extern crate alloc;

pub mod design;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod numerics;
pub mod problem;
pub mod problems;

pub use error::{Error, Result};

pub(crate) mod prelude {
    #[allow(unused_imports)]
    pub use alloc::string::String;
    pub use alloc::vec;
    pub use alloc::vec::Vec;
    #[allow(unused_imports)]
    pub use num_traits::Float;
}
