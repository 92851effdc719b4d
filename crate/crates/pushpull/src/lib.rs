//! Simulator and certification toolkit for stochastic push-pull
//! decentralized optimization over directed graphs.
//!
//! The crate has three layers:
//!
//! * graph and weight-matrix construction with numerical certification of
//!   the structural requirements ([`digraph`], [`mixing`]),
//! * the spectral series constants and stepsize/bound diagnostics that
//!   quantify linear speedup ([`series`]),
//! * problem instances and the simulation engine with per-iteration
//!   runtime-invariant tracking ([`problems`], [`engine`]),
//!
//! tied together by a config-driven CLI ([`config`], [`cli`]).

pub mod cli;
pub mod config;
pub mod digraph;
pub mod engine;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mixing;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod series;

pub use error::{Error, Result};
