//! Experiments with Hilbert's Tenth Problem over subrings of the rationals.

pub mod arith;
pub mod poly;
pub mod subring;
pub mod serde_text;
pub mod solver;
pub mod quad;
pub mod reduction;
pub mod category;
pub mod measure;
pub mod definability;
pub mod store;
