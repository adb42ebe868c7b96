pub mod analytics;
pub mod basis;
pub mod error;
pub mod geometry;
pub mod integrals;
pub mod operators;
pub mod quadrature;
pub mod spectral;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
