//! Counting and constructing Egyptian fraction representations.
//!
//! A representation of a positive rational `x` is a set `A ⊆ [n]` with
//! `Σ_{a∈A} 1/a = x`. The crate provides
//!
//! - [`exactmath`]: exact rationals, prime sieves and powersmoothness;
//! - [`counting`]: exact counts by brute force and meet-in-the-middle;
//! - [`entropy`]: the maximum-entropy inclusion profile and the constants
//!   `c_x` governing the exponential growth of the number of representations;
//! - [`modelsim`]: sampling and Monte Carlo checks of that profile;
//! - [`modular`]: subset sums of modular inverses;
//! - [`absorption`]: an exact constructive pipeline producing verified witnesses.

#![forbid(unsafe_code)]

pub mod absorption;
pub mod counting;
pub mod entropy;
pub mod error;
pub mod exactmath;
pub mod modelsim;
pub mod modular;

pub use error::{Error, Result};
pub use exactmath::{reciprocal_sum, FactorSieve, Rational};
