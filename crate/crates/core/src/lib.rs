//! Measure-valued Pólya urns with deterministic, random and signed
//! replacements, and the lift that turns a random-replacement urn on `S` into
//! a deterministic one on `S × [0,1]`.
//!
//! ```
//! use urnlift::{lift, models};
//!
//! let urn = models::friedman_random(0.5)?;
//! let run = lift::coupled_run(&urn, 100, 42, 1e-9)?;
//! assert!(run.max_projection_error <= 1e-9);
//! # Ok::<(), urnlift::Error>(())
//! ```

pub mod cli;
mod error;
pub mod kernel;
pub mod lift;
pub mod measure;
pub mod models;
pub mod process;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
