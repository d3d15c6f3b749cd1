//! Simulation of single-qubit dephasing channels and neural classification of
//! their noise parameters from SIC-POVM snapshots taken at two random times.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`qchannel`] evaluates the dephasing coefficient `Λ(t)` for classical
//!    `1/f^α` noise or an Ohmic-family boson bath and applies it to a state.
//! 2. [`tomo`] turns evolved states into the four SIC-POVM outcome
//!    probabilities, optionally with Gaussian measurement noise.
//! 3. [`datagen`] assembles labeled datasets `p(t₁) ⊕ p(t₂)` over a grid of
//!    noise parameters and stores them in a checksummed binary format.
//! 4. [`nn`] trains small feed-forward classifiers; [`metrics`] scores them.
//!
//! [`experiment`] wires the stages into named presets.

pub mod datagen;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod nn;
pub mod qchannel;
pub mod report;
pub mod rng;
pub mod tomo;

pub use error::{Error, Result};
