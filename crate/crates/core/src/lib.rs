//! Multi-level approximation (MLA) of one-dimensional signals.
//!
//! A normalized signal is cut by `K` equally spaced thresholds; the closed
//! super-level components at each threshold form an interval representation.
//! On top of that representation the crate provides nucleosome pattern
//! discovery, a hidden Markov baseline, a randomness test, interval-tree and
//! convolution kernels, and the classifiers that consume them.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod hmm;
pub mod io;
pub mod kernel;
pub mod mla;
pub mod nucleosome;
pub mod ocknn;
pub mod pattern;
pub mod randomness;
pub mod rng;
pub mod signal;
pub mod svm;
pub mod synth;
pub mod wilcoxon;

pub use error::{Error, Result};
pub use mla::{horizontal_sampling, reconstruct, Interval, IntervalRepresentation};
pub use signal::{correlation, CorrelationMethod, Signal};
