//! Accelerated dual decomposition for equality-coupled multi-agent convex
//! programs, executed over a randomly failing communication network.
//!
//! Every agent `i` owns a strongly convex quadratic cost over a box and one
//! block of coupling rows `G_i^i u_i + Σ_{j∈N_i} G_i^j u_j = g_i`. The engine
//! maximizes the separable dual with Nesterov momentum, either with full
//! information ([`engine::run_alg1`]) or with per-iteration Bernoulli link
//! failures and local multiplier trackers ([`engine::run_alg2`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the Monte Carlo
//! harness and the command line live in the `accelnet` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod engine;
mod error;
pub mod linalg;
pub mod model;
pub mod netsim;
pub mod opf;
pub mod oracle;
pub mod stepsize;
pub mod subsolver;
pub mod synth;

pub use error::{Error, Result};
pub use model::{AgentSpec, InfluenceGraph, ProblemInstance};
pub use netsim::{LinkDraw, NetworkModel};
pub use stepsize::StepsizeTable;

pub use nalgebra::{DMatrix, DVector};
