pub mod bounds;
pub mod diffusion;
pub mod error;
pub mod estimators;
pub mod fields;
pub mod geometry;
pub mod verify;

pub use error::{Error, Result};
