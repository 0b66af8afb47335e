//! Numerical laboratory for Bergman metric spaces on complex projective
//! space.
//!
//! The crate parameterizes Bergman metrics on `CP^n` (pulled back through
//! degree-`k` monomial embeddings) by upper-triangular matrices with
//! positive unit-product diagonal, computes restricted Calabi and Mabuchi
//! Gram matrices by Fubini-Study quadrature, and drives automorphism-orbit
//! experiments that exhibit unbounded volume growth along discrete unipotent
//! orbits of isometric, disjoint parameter-space balls.
//!
//! Module map:
//! - [`projspace`]: monomial bases, charts, exact derivatives, FS sampling.
//! - [`bergman`]: canonical QR coordinates and pointwise Kahler quantities.
//! - [`metrics`]: Calabi/Mabuchi pairings, Gram matrices, volume densities.
//! - [`autgroup`]: induced section matrices, pullbacks, isometry defects.
//! - [`experiments`]: orbit sweeps, divergence reports, acceptance suite.

pub mod autgroup;
pub mod bergman;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod oracles;
pub mod projspace;

pub use bergman::{BergmanPoint, HermitianForm, SLMatrix, TangentParam};
pub use error::{Error, Result};
pub use metrics::{Estimate, GramMatrix, MetricKind};
pub use projspace::{
    build_basis, eval_monomials, lex_less, sample_fs, section_space_dim, ChartPoint,
    DerivativeLevel, HomogeneousPoint, MonomialBasis, MonomialEval, MultiIndex, QuadratureMethod,
    QuadratureSpec,
};
