//! K-cells of stationary isotropic Poisson hyperplane processes, mean-width
//! functionals, and Monte Carlo experiments on the rate at which
//! `E W(Z_K) - W(K)` vanishes.

pub mod campaign;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod geom;
pub mod kcell;
pub mod parallel;
pub mod plot;
pub mod sampler;
pub mod stats;
pub mod support;

pub use error::{Error, Result};
