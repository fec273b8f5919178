//! The large-N multinomial dimer model on periodic bipartite lattices.
//!
//! The crate builds lattices and regions, counts and samples `N`-dimer
//! covers exactly on small graphs, computes critical gauges by Sinkhorn
//! scaling, evaluates free energies and surface tensions, and checks the
//! explicit limit shapes against their Euler-Lagrange equations.

pub mod closed_form;
pub mod el;
pub mod error;
pub mod flow;
pub mod gauge_limit;
pub mod lattice;
pub mod matching;
pub mod region;
pub mod shapes;
pub mod sinkhorn;
pub mod tangent;
pub mod thermo;

pub use error::{Error, Result};
