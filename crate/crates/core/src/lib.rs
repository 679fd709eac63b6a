//! A 2D heterogeneous Helmholtz solver built around overlapping Schwarz
//! preconditioners for right-preconditioned GMRES.
//!
//! The library discretises the wave-guide model problem on the unit square
//! with P1 finite elements, decomposes the mesh into overlapping subdomains,
//! and accelerates GMRES with the optimised restricted additive Schwarz
//! (ORAS) preconditioner, optionally augmented by a deflation-based second
//! level built from one of several spectral coarse spaces:
//!
//! * interface (Dirichlet-to-Neumann) eigenvectors with Helmholtz extension,
//! * generalised eigenproblems on whole subdomains (Neumann vs. weighted
//!   Dirichlet pencils) in Helmholtz, Laplace, and mixed Helmholtz/Laplace
//!   flavours, with Neumann or impedance interface conditions.
//!
//! All numerical kernels are self-contained: complex CSR matrices, a sparse
//! LU with fill-reducing ordering, full GMRES, a dense complex eigensolver
//! used as a brute-force oracle, and a shift-invert Arnoldi method for the
//! large sparse pencils.
//!
//! The `harness` module drives experiment grids from JSON configurations and
//! writes CSV/JSON reports and SVG plots; the `helmholtz-dd` binary wraps it
//! in a CLI.

pub mod assembly;
pub mod coarse;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod media;
pub mod mesh;
pub mod partition;
pub mod precond;
pub mod rng;

pub use error::{Error, Result};
