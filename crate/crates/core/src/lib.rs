//! Desk-scale benchmarking of quantum and classical binary classifiers.
//!
//! The crate bundles an exact circuit simulator ([`sim`]), gradient and
//! optimizer machinery ([`autodiff`]), classical learners ([`classical`]),
//! the quantum model zoo ([`models`]), dataset generators ([`datagen`]) and
//! the benchmark harness ([`bench`]).

pub mod error;
pub mod autodiff;
pub mod bench;
pub mod classical;
pub mod datagen;
pub mod models;
pub mod sim;

pub use error::{Error, Result};
