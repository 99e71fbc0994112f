//! Boundary-induced slow mixing in stochastic reaction networks.
//!
//! - [`network`] and [`dsl`]: networks, mass-action propensities, the text format
//! - [`structure`]: the cyclic two-species class, escape exponents, exact path probabilities
//! - [`simulate`]: Gillespie simulation, first passage times, boundary visits
//! - [`analysis`]: Poisson stationary laws, windowed TV, mixing times, log-log fits

pub mod analysis;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod network;
pub mod simulate;
pub mod structure;

pub use dsl::{parse_network, render_network};
pub use error::{Error, Result};
pub use network::{Complex, Reaction, ReactionNetwork, Species, State};
