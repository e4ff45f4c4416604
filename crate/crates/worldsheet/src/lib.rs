pub mod background;
pub mod deformation;
pub mod einsum;
pub mod embedding;
pub mod error;
pub mod extrinsic;
pub mod gaugeform;
pub mod grid;
pub mod internal;
pub mod symplectic;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
