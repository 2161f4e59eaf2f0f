//! Reduced-order thermal model of a thin composite plate cooled by an
//! embedded microvascular channel.
//!
//! The crate builds a structured triangular mesh, embeds the channel along
//! grid edges, assembles a nonlinear Galerkin system and solves it with
//! Newton's method in steady state or with BDF time stepping.

pub mod assembly;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod materials;
pub mod mesh;
pub mod postprocess;
pub mod scenario;
pub mod solvers;
pub mod sparse;
pub mod verification;

pub use error::{Error, Result};
