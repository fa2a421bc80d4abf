//! Exact normaliser computation for finite matrix groups and classical
//! simulation of the resulting circuits.
//!
//! The crate is organised around five layers:
//!
//! - [`cyclotomic`]: exact scalars in ℚ(ζ_N), the substrate for everything else.
//! - [`matrix`] and [`linalg`]: small dense matrices over those scalars and
//!   exact Gaussian elimination / null-space computation.
//! - [`group`]: finite matrix groups — closure from generators, centres,
//!   irreducibility, tensor squares, and a fast index-level multiplication
//!   oracle backed by verified modular fingerprints.
//! - [`normaliser`]: the search for linear and projective normalisers of a
//!   group and its tensor square, plus the entangling-gate test.
//! - [`catalog`] and [`simulator`]: the bundled U(2) group catalog with its
//!   classification pipeline, and linear-time circuit simulation by backward
//!   observable propagation.
//!
//! File formats and the CLI surface live in [`io`].

pub mod catalog;
pub mod cyclotomic;
pub mod group;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod normaliser;
pub mod simulator;

pub use cyclotomic::{parse_cyclo, CRational, Cyclo};
pub use group::MatrixGroup;
pub use matrix::CMatrix;
