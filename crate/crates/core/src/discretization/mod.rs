//! Bounded grids on the group, grid functions, the discrete sub-Laplacian
//! and its spectral calculus, group convolution, mollification and
//! truncation.

mod convolution;
mod function;
mod grid;
mod operator;

pub use convolution::{bump, convolve, cutoff, min_mollifier_radius, mollify, truncate, Mollified};
pub use function::GridFunction;
pub use grid::{Boundary, Grid, GridSpec, NODE_CAP};
pub use operator::{apply_spectral_function, build_sublaplacian, SparseRows, SpectralOperator};
