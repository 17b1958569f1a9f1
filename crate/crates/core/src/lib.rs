//! Sifted integer sequences, quadratic exponential sums over them, and
//! numerical checks of the bounds such sums satisfy.

pub mod arith;
pub mod bilinear;
pub mod diophantine;
pub mod error;
pub mod expsum;
pub mod lemmas;
pub mod numtheory;
pub mod quadform;
pub mod report;
pub mod sieve;
pub mod suite;
pub mod summation;

pub use error::{Error, Result};
