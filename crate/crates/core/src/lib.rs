//! Load balancing in heterogeneous cellular networks.
//!
//! The crate generates random multi-tier deployments on a torus, evaluates
//! user-association policies (max received power, max SINR, biased cell
//! range expansion and a load-aware log-utility optimizer), converts
//! associations into long-term user rates under round-robin sharing with
//! optional almost-blank subframes, and runs Monte Carlo sweeps over bias
//! and blanking parameters.
//!
//! The pipeline for a single draw is
//! [`netgen`] → [`radio`] → [`assoc`] / [`loadopt`] → [`sched`], with
//! [`stats`] and [`mc`] on top.

pub mod assoc;
pub mod cli;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod loadopt;
pub mod mc;
pub mod netgen;
pub mod output;
pub mod radio;
pub mod scenario;
pub mod sched;
pub mod stats;

pub use error::{Error, Result};
