//! Link-level simulation and closed-form analysis of full-duplex massive
//! MIMO multicell networks.
//!
//! The crate covers network geometry and large-scale fading, Rayleigh
//! channel sampling, pilot-based MMSE estimation, MF/ZF transceivers with
//! hardware impairments and fronthaul quantization, Monte-Carlo and
//! closed-form ergodic rates, and full- versus half-duplex comparisons.

pub mod channel;
pub mod config;
pub mod duplex;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod linalg;
pub mod rate;
pub mod rng;
pub mod runner;
pub mod transceivers;

pub use config::{load_config, Scenario, SystemConfig};
pub use error::{Error, Result};
pub use estimation::Scheme;
pub use rate::{Duplex, Link, RateReport};
pub use transceivers::FilterKind;
