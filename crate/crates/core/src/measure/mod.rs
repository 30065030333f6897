//! Finite and signed atomic measures on concrete colour spaces.
//!
//! A [`FiniteMeasure`] is a list of weighted components: atoms, diffuse
//! families (currently uniform laws on subintervals of `[0,1]`), and products
//! `inner × λ` with Lebesgue measure on an extra `[0,1]` coordinate. Measures
//! can be evaluated exactly on the [`TestSet`] family of their space.

mod finite;
mod signed;
mod space;

pub use finite::{Component, ContinuousFamily, FiniteMeasure, Payload};
pub use signed::SignedAtomicMeasure;
pub use space::{Colour, ColourSpace, TestSet};

#[cfg(test)]
mod tests;
