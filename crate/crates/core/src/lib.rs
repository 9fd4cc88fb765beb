//! Lowest-order virtual element discretization of the transient Maxwell
//! equations on polyhedral meshes, with block-preconditioned GMRES.

pub mod assembly;
pub mod driver;
pub mod error;
pub mod mesh;
pub mod solver;
pub mod sparse;
pub mod vem;

pub use error::{Error, Result};
