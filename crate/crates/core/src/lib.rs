//! Finite-scale tools for topological dynamics on tori and shift spaces.
//!
//! The crate estimates rotation sets, entropy, pressure and metric mean
//! dimension, builds glued and shadowing orbits, and constructs points whose
//! Birkhoff averages oscillate over a prescribed set.

pub mod complexity;
pub mod error;
pub mod gluing;
pub mod historic;
pub mod observables;
pub mod rotation;
pub mod seeding;
pub mod systems;

pub use error::{Error, Result};
pub use observables::{Observable, Sampler};
pub use systems::{MetricPoint, ShiftSpace, SymbolPoint, System, TorusLift};
