//! Numerical toolkit for the Lugiato-Lefever equation extended by a
//! first-order potential term i eps V(x) u_x: stationary states on the torus,
//! effective-potential pinning analysis, continuation in detuning and in the
//! perturbation strength, spectral stability, and time integration.

pub mod config;
pub mod continuation;
pub mod evolution;
pub mod field;
pub mod linalg;
pub mod operators;
pub mod output;
pub mod pinning;
pub mod plot;
pub mod reductions;
pub mod run;
pub mod stationary;

pub use field::{dealiased_product, inner_product, Field, PotentialSpec, TorusGrid};
pub use stationary::Params;
