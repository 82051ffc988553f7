//! Degenerate half-line operators `y^alpha (D_yy + (c/y) D_y) - V` with a
//! Neumann condition at the origin.
//!
//! The crate is organised bottom-up:
//!
//! * [`special_fn`]: modified Bessel functions `I_nu`, `K_nu` with scaled entry points.
//! * [`transforms`]: the power-substitution isometries `T_beta` and their parameter algebra.
//! * [`weighted_space`]: graded meshes, grid functions and weighted `L^p_m` quadrature.
//! * [`green_resolvent`]: the closed-form Neumann Green kernel and kernel quadrature.
//! * [`discrete_operator`]: flux-form tridiagonal discretisation, resolvents and semigroups.
//! * [`verification`]: property checkers producing [`BoundReport`]s.

// `!(x > a)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complex_serde;
pub mod discrete_operator;
pub mod error;
pub mod green_resolvent;
pub mod special_fn;
pub mod transforms;
pub mod verification;
pub mod weighted_space;

pub use discrete_operator::{EvolutionConfig, Scheme, TridiagonalOperator};
pub use error::{Error, Result};
pub use green_resolvent::{OperatorParams, PotentialSpec, PotentialTerm, SpectralParam};
pub use num_complex::Complex64;
pub use transforms::{ConjugationResult, TransformParams};
pub use verification::{BoundReport, FamilySample};
pub use weighted_space::{GradedMesh, GridFunction, SpaceParams};
