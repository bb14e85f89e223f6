//! Reinforcement-learning workbench for single-zone office climate control.
//!
//! The building is a two-node RC thermal model driven by stochastic weather
//! (time-of-day Markov chains) and a stochastic occupant. A DDPG agent learns
//! from partial observations (air temperature, time of day, occupancy) and is
//! compared against a greedy one-step controller with full state access.

pub mod error;
pub mod thermal;
pub mod occupant;
pub mod weather;
pub mod environment;
pub mod neural;
pub mod ddpg;
pub mod baseline;
pub mod harness;

pub use error::{Error, Result};
