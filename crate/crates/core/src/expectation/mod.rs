//! Factorized distributions over random facts and exact expectations of
//! formulas and losses under them.

mod cache;
mod circuit;
mod distribution;
mod engine;
mod error;
mod loss;

pub use cache::LossCache;
pub use circuit::Pin;
pub use distribution::FactorDistribution;
pub use engine::{expect_fact, expect_formula, expect_loss, FactExpectation};
pub use error::{ExpectationError, ExpectationResult};
pub use loss::{CompiledLoss, LossExpression};
