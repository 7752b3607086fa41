//! High-precision recovery of arithmetic functions from their Dirichlet
//! series at the even integers, with exact sieve oracles for checking.

pub mod arith;
pub mod constants;
pub mod error;
pub mod indicator;
pub mod inversion;
pub mod mag;
pub mod numerics;
pub mod oracle;
pub mod parallel;
pub mod primecount;

pub use error::{Error, Result};
pub use numerics::{make_context, ContextBuilder, NumericContext, SeriesResult, Variant};
pub use parallel::Execution;
