//! Verification toolkit for color-flavor transformation identities.
//!
//! The crate is organised bottom-up: a Grassmann/supermatrix layer, Haar
//! sampling on the classical compact groups, the color-flavor identity
//! checks themselves, kernel and radial-integral analysis on the flavor
//! manifolds, Cayley-transform resolvent identities, and a report layer that
//! the `cfkit` binary drives.

pub mod cayley;
pub mod cf;
pub mod error;
pub mod grassmann;
pub mod haar;
pub mod kernel;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod stats;
pub mod suite;
pub mod superfield;
pub mod supermatrix;

pub use error::{CfError, Result};
pub use scalar::C64;
