//! Classical simulation of Hamiltonian quantum GANs: an adversarial game
//! between two pulse-level optimal-control agents that learns unknown pure
//! states and unitary channels, plus the supporting optimal-control toolbox
//! (GRAPE, Krotov, CRAB), cost-function variants, shot-based gradient
//! emulation, and control-bandwidth analysis.

pub mod controls;
pub mod costs;
pub mod error;
pub mod qcore;

pub use error::{Error, Result};
