//! Simulation library for Sybil-resilient multi-robot coordination: trust
//! consensus from channel observations, trusted graph estimation, resilient
//! consensus and flocking with target tracking.

pub mod consensus;
pub mod error;
pub mod estimation;
pub mod flocking;
pub mod harness;
pub mod threat;
pub mod topology;
pub mod trust;

pub use error::{Error, Result};
