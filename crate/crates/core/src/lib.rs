//! Chatterjee's rank correlation ξₙ, the exact and Monte Carlo limiting
//! variance of √n(ξₙ − ξ), CLT simulation and confidence intervals.
//!
//! ```
//! use chatterjee_core::{model::Sample, estimator::xi};
//!
//! let s = Sample::from_columns(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
//! assert_eq!(xi(&s, 0).unwrap(), 0.25);
//! ```

pub mod cli;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod model;
pub mod rng;
pub mod sim;
pub mod theory;
pub mod vstat;

pub use error::{Result, XiError};
pub use estimator::{reorder_by_x, xi, xi_n, RankData};
pub use model::{builtin_model, GenerativeModel, JointPmf, Model, ModelSpec, Sample};
pub use theory::{exact_sigma, mc_theory, TheoryReport};
