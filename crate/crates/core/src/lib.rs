//! Simulation and analysis of the configuration model with i.i.d. degrees.

pub mod bp;
pub mod degree;
pub mod error;
pub mod graph;
pub mod rng;
pub mod spg;
pub mod stats;
pub mod zeta;

pub use degree::{size_biased_offspring, DegreeLaw, LawSpec, MomentSummary, OffspringLaw};
pub use error::{Error, Result};
pub use rng::{stream, Purpose};
