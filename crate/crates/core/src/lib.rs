//! Toroidal Hopf maps that solve the static complex eikonal equation
//! `(∇χ)·(∇χ) = 0` on ℝ³.
//!
//! The modules build on each other:
//!
//! - [`coords`]: the toroidal chart `(η, ξ, φ)` and its orthonormal frame.
//! - [`hopf`]: the maps `χ^(m,n)`, their profile and analytic gradients.
//! - [`calculus`]: finite-difference residuals and sampled residual scans.
//! - [`geometry`]: the split frame, the horizontal metric and the conformal check.
//! - [`fibers`]: level-set tracing and Gauss linking numbers.
//! - [`symmetry`]: holomorphic target maps and conformal maps of the base.
//! - [`export`]: CSV and OBJ fiber files.
//! - [`cli`]: the command-line front end.

pub mod calculus;
pub mod cli;
pub mod coords;
pub mod error;
pub mod export;
pub mod fibers;
pub mod geometry;
pub mod hopf;
pub mod symmetry;

pub use error::{Error, Result};
pub use hopf::HopfMapSpec;
