//! Autologistic (Ising) models on rectangular lattices with free boundaries.

mod exact;
mod gibbs;
mod grid;
mod lattice;

pub use exact::*;
pub use gibbs::*;
pub use grid::*;
pub use lattice::*;
