pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fitting;
pub mod hamiltonian;
pub mod observables;
pub mod pauli;
pub mod spectral;
pub mod star;

pub use error::{Error, Result};
