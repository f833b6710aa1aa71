//! Scenario files, built-in demos and scaling benchmarks on top of `qdyn`.

pub mod bench;
pub mod demos;
pub mod error;
pub mod expr;
pub mod opexpr;
pub mod scenario;

pub use error::{Result, ScenarioError};
