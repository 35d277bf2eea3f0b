pub mod averages;
pub mod counterexamples;
pub mod counting;
pub mod error;
pub mod forms;
pub mod group_actions;
pub mod lattices;
pub mod lie;
pub mod linalg;
pub mod quadrature;
pub mod rational;
pub mod stats;
pub mod volumetrics;

pub use error::{Error, Result};
