//! Delayed self-reinforcement (DSR) for discrete-time networked consensus.
//!
//! A network of `n` follower agents tracks a single source node through the
//! pinned Laplacian `K` of the communication graph. The plain update
//!
//! ```text
//! I(k+1) = (I - γK) I(k) + γ B I_s(k)
//! ```
//!
//! is limited in speed by the stability bound on `γ`. DSR adds a momentum-like
//! term `β [I(k) - I(k-1)]` to every agent's update, which can shorten the
//! settling time by more than an order of magnitude without touching the
//! update interval.
//!
//! Module map:
//!
//! - [`graph`]: graph specifications, Laplacian, pinned partition `(K, B)`.
//! - [`spectral`]: dense eigenvalue solvers and spectrum bookkeeping.
//! - [`stability`]: gain bounds, Perron and DSR-Perron matrices, verdicts.
//! - [`design`]: gain sweeps, critical-damping DSR gain, settling predictors.
//! - [`sim`]: discrete, DSR, second-order and continuous simulation engines,
//!   settling-time measurement.
//! - [`formation`]: planar kinematics driven by heading trajectories.
//! - [`cli`]: the `dsrnet` command-line front end.

// NaN-rejecting `!(x > 0.0)` guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod design;
pub mod error;
pub mod formation;
pub mod graph;
pub mod linalg;
pub mod sim;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
