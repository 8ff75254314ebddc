//! Constructive Helmholtz decomposition v = v0 + grad q for vector fields
//! on smooth bounded planar domains, with the bounded-mean-oscillation
//! estimators, frozen-coefficient boundary solvers and layer-potential
//! machinery that make the construction checkable, plus the half-space
//! counterexample suite showing where the tangential estimate must fail.

pub mod config;
pub mod counterexample;
pub mod decompose;
pub mod error;
pub mod extension;
pub mod fields;
pub mod freezing;
pub mod geometry;
pub mod grid;
pub mod neumann;
pub mod singular;
pub mod verify;

pub use error::{Error, Result};
pub use grid::Grid;
