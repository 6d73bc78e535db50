//! Protection-level policies for allocating `m` divisible units between
//! low- and high-reward requests when demand advice comes as a convex
//! region.
//!
//! - [`region`]: advice regions and their envelopes
//! - [`ratios`]: compatible-ratio formulas and balancing
//! - [`bounds`]: consistency band and robustness corridor
//! - [`consistency`]: the maximum consistent ratio
//! - [`pareto`]: the Pareto solver and [`PlFunction`]
//! - [`engine`]: the online allocation state machine
//! - [`advice`]: regions built from samples
//! - [`harness`]: simulation experiments

pub mod advice;
pub mod bounds;
pub mod consistency;
pub mod engine;
pub mod harness;
pub mod pareto;
pub mod ratios;
pub mod region;

pub use pareto::PlFunction;
pub use ratios::{DemandPoint, Rewards};
pub use region::{MlRegion, Point};
