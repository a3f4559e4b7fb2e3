//! Simulator and analytic oracles for mining-pool reward methods.

pub mod accum;
pub mod agents;
pub mod engine;
pub mod oblivious;
pub mod criteria;
pub mod error;
pub mod oracles;
pub mod sim;
pub mod stochastic;

pub use error::{Error, Result};
