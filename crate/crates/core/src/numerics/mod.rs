//! Dense small-matrix utilities, finite-difference stencils, symmetric
//! eigen-decomposition and seeded sampling.

mod eigen;
mod exec;
mod fd;
mod matrix;
pub mod rng;

pub use eigen::{symmetric_eigen, symmetric_eigenvalues, SymmetricEigen};
pub use exec::{Executor, Sequential};
pub use fd::{
    central_derivatives_1d, central_gradient, cross_derivative_matrix, mixed_second_derivative,
    FdConfig,
};
pub use matrix::Matrix;
pub use rng::{RngStream, StreamRng};
