//! Riesz, fractional Sobolev and Besov capacities as convex programs on the
//! grid, their set-function properties, capacitary strong-type integrals,
//! tents and the Carleson/trace embedding verifiers.

mod capacities;
mod embedding;
mod measure;
mod sets;
mod solvers;
mod tents;

pub use capacities::{
    besov_capacity, capacity_property_suite, comparability, riesz_capacity, sobolev_capacity, strong_capacitary_check, CapacityKind,
    CapacityResult, Capacitor, PropertyOutcome, PropertyReport, RelaxationReport, SolverOptions, StrongReport,
};
pub use embedding::{
    carleson_embedding_verify, cp_minimizing, trace_embedding_verify, EmbeddingReport, ExtensionSemigroup, FamilyEntry,
    FamilyValues,
};
pub use measure::{Atom, DiscreteMeasure};
pub use sets::{ball_family, random_sets, DiscreteSet};
pub use solvers::{bound_qp, spg, QpResult, SpgResult};
pub use tents::{tent, tent_identity_report, tent_lower_bound_check, Tent, TentIdentityReport};
