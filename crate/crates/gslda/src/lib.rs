//! Greedy sparse LDA and boosted sparse LDA for training object-detection
//! cascades over Haar-like features.
//!
//! The crate covers the full pipeline: sparse discriminant selection
//! ([`scatter`]), weighted decision stumps ([`weak`]), boosting weight
//! updates and stump pruning ([`boosting`]), Haar features on integral
//! images ([`features`]), node and cascade training with negative
//! bootstrapping ([`cascade`]), multi-scale detection and evaluation
//! ([`detect`]), file formats ([`io`]), and synthetic data ([`synth`],
//! [`toy`]).

pub mod boosting;
pub mod cascade;
pub mod detect;
mod error;
pub mod features;
pub mod io;
pub mod par;
pub mod scatter;
pub mod synth;
pub mod toy;
pub mod weak;

pub use error::{Error, Result};
