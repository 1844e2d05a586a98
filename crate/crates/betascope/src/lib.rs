//! Multiscale flatness diagnostics for finite point samples of sets in
//! low-dimensional Euclidean space (ambient dimension up to 4).
//!
//! The library works on `SampledSet`s: finite h-nets of an underlying set.
//! On top of these it builds
//!
//! * dyadic grids, d-dimensional skeleta, and an exact dyadic Hausdorff
//!   content ([`dyadic`]),
//! * Christ-David cube trees from nested maximal nets ([`netcubes`]),
//! * flatness coefficients: the sup-distance beta number and its content
//!   (Choquet-integral) variant, plus bilateral-weak-geometric-lemma
//!   classification ([`beta`]),
//! * corona decompositions: Frostman-style bad cubes, stopping-time forests,
//!   Whitney cube families, skeleton approximants and their tile refinement,
//!   and a Federer-Fleming projection of sample points ([`corona`]),
//! * traveling-salesman sums, regularity diagnostics, a Reifenberg flatness
//!   test, and the hole-filling surface Sigma ([`tst`]),
//! * uniform non-flatness detection and dimension lower bounds ([`dimension`]),
//! * deterministic generators of test sets with known ground truth ([`gen`]).
//!
//! The `betascope` binary exposes the pipeline as subcommands; each major
//! capability also has a runnable example under `examples/`.

pub mod beta;
pub mod corona;
pub mod dimension;
pub mod dyadic;
mod error;
pub mod gen;
pub mod geom;
pub mod io;
pub mod netcubes;
pub mod tst;
pub mod verify;

pub use error::{Error, Result};

/// Hard upper bound on the ambient dimension.
pub const MAX_DIM: usize = 4;

/// Factor of the sample resolution below which scale-dependent operations
/// refuse to work: radii smaller than `RESOLUTION_FACTOR * h` probe geometry
/// that the h-net cannot resolve.
pub const RESOLUTION_FACTOR: f64 = 8.0;
