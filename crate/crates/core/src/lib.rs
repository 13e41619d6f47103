//! Numerical Aubry–Mather theory for exact magnetic Lagrangians
//! `L(x, v) = |v|²/2 + η(v)` on the flat 2-torus.
//!
//! The pipeline discretizes the speed-capped tangent bundle into a
//! [`graph::PhaseGraph`], computes the critical value from minimum mean
//! cycles, builds the critical action potential and its static classes, and
//! checks the structure of minimizing closed measures.

// `!(x > 0.0)` is how NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod critical;
pub mod cycles;
pub mod digraph;
pub mod error;
pub mod example;
pub mod flow;
pub mod graph;
pub mod lagrangian;
pub mod measure;
pub mod oneform;
pub mod potential;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
