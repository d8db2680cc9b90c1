//! Greedy-optimality thresholds and optimal online power control for
//! energy-harvesting links with a finite battery.
//!
//! The battery evolves as `B_t = min{B_{t-1} - G_{t-1} + X_t, c}` and a
//! policy consumes `0 <= G_t <= B_t` each slot for reward `r(G_t)`. The
//! greedy policy `G_t = B_t` is optimal exactly when `c <= c*`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod bellman;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod output;
pub mod quadrature;
pub mod reward;
pub mod roots;
pub mod sim;
pub mod spec;
pub mod threshold;
pub mod verify;

pub use distributions::{EnergyDistribution, Family, FamilyName};
pub use error::{Error, Result};
pub use reward::RewardFunction;
pub use threshold::{ThresholdReport, UpperBound};
