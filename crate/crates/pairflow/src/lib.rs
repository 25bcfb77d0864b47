//! Estimates latent "intentional" trading volume between assets from
//! graph-masked observed volumes and searches for the connected M-edge
//! trading-pair graph that covers the most of it.
//!
//! The pipeline has four stages:
//!
//! 1. [`ingest`] parses per-pair volume records into windowed symmetric
//!    volume matrices over a shared symbol table.
//! 2. [`ipm`] fits the signed rank-2 model `K* = w1 w1' - w2 w2'` to one
//!    window by a barrier interior-point method.
//! 3. [`bnb`] picks the connected M-edge graph maximizing covered `K*`
//!    volume by best-first branch and bound.
//! 4. [`eval`] sweeps edge budgets over rolling windows to produce coverage
//!    and retention curves, and diffs optimized graphs against observed ones.
//!
//! Run `cargo run --example estimate_factors` (or any other example) for an
//! end-to-end tour; the `pairflow` binary wires the same stages into batch
//! subcommands.

pub mod bnb;
pub mod cli;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod ipm;
pub mod linalg;
pub mod matcore;
pub mod synth;

pub use error::{Error, Result};
pub use matcore::{FactorPair, PairGraph, SymMatrix, SymbolTable, VolumeMatrix};
