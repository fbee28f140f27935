//! Joint spectrum partitioning and power allocation for a semi-integrated
//! sensing and communication (semi-ISaC) downlink.
//!
//! One base station serves three services on disjoint bandwidth shares:
//! a sensing-only target, an ISaC user (downlink data plus echo sensing) and
//! a communication-only user. The crate provides
//!
//! * the channel model and its reduction to per-stream link coefficients
//!   ([`channel`]),
//! * radar mutual information / data rate functions with exact derivatives
//!   ([`objective`]),
//! * a barrier interior-point solver for the weighted sum problem plus a
//!   brute-force grid oracle ([`solver`]),
//! * Dinkelbach energy-efficiency maximization ([`dinkelbach`]),
//! * the SP-EPA, PA-ESP and random benchmark schemes ([`baselines`]),
//! * a Monte Carlo sweep harness emitting CSV tables ([`experiments`]),
//! * the JSON configuration and command-line front end ([`cli`]).
//!
//! All values crossing module boundaries are SI: Hz, W, m, K, bits/s.

pub mod baselines;
pub mod channel;
pub mod cli;
pub mod dinkelbach;
pub mod error;
pub mod experiments;
pub mod objective;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
