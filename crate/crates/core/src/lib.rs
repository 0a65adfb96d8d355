//! Context-aware quantum circuit generation for Ising-type optimisation problems.
//!
//! The library is generic over the scalar type ([`Real`], implemented for `f32` and `f64`);
//! the `f64` aliases below are what the CLI and the tests use.

pub mod autodiff;
pub mod baselines;
pub mod circuit;
pub mod embed;
pub mod error;
pub mod generator;
pub mod harness;
pub mod ising;
pub mod model;
pub mod optim;
pub mod scalar;
pub mod seed;
pub mod train;

pub use error::{GqcoError, Result};
pub use scalar::Real;

pub type Problem = ising::IsingProblem<f64>;
pub type Model = model::GqcoModel<f64>;
pub type State = circuit::StateVector<f64>;
pub type Graph = embed::ProblemGraph<f64>;
