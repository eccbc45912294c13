//! Randomised rank-1 lattice rules over a band of primes in weighted Korobov
//! spaces: construction of the generating vector, exact and empirical
//! root-mean-square errors, and the accompanying upper and lower bounds.

pub mod analysis;
pub mod bounds;
pub mod config;
pub mod construct;
pub mod error;
pub mod experiment;
pub mod primes;
pub mod rng;
pub mod rule;
pub mod space;
pub mod special;

pub use error::{Error, Result};
pub use space::{FrequencyVector, KorobovSpace, TrigPolynomial, WeightScheme};
