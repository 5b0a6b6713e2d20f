//! Numerical laboratory for sub-Laplacians on stratified Lie groups.
//!
//! The crate discretizes a stratified group (the Euclidean lines/planes and the
//! first Heisenberg group) on a bounded box, assembles a symmetric positive
//! semidefinite sub-Laplacian, and drives every operator in the library through
//! scalar multipliers of its eigendecomposition:
//!
//! * [`semigroups`]: heat, fractional heat and Caffarelli–Silvestre (Poisson)
//!   semigroups, subordination cross-checks and kernel bound certification;
//! * [`fractional`]: fractional powers, Riesz potentials and transforms,
//!   fractional gradients/divergences and the maximal function;
//! * [`spaces`]: fractional Sobolev norms and Besov seminorms;
//! * [`capacity`]: Riesz, Sobolev and Besov capacities as convex programs, tents
//!   and the Carleson/trace embedding verifiers.

pub mod capacity;
pub mod discretization;
pub mod error;
pub mod fractional;
pub mod group;
pub mod linalg;
pub mod quadrature;
pub mod semigroups;
pub mod spaces;
pub mod suite;

pub use discretization::{Boundary, Grid, GridFunction, GridSpec, SpectralOperator};
pub use error::{Error, Result};
pub use group::{GroupDescriptor, GroupPoint};
