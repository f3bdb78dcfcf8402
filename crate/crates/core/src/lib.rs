pub mod affine_actions;
pub mod classify;
pub mod d4_family;
pub mod error;
pub mod exact_linear;
pub mod torus;

pub use error::{Error, Result};
