//! Distances between convex sets of states on finite-dimensional C*-algebras.

pub mod algebra;
pub mod classical;
pub mod error;
pub mod hyper;
pub mod lipanalog;
pub mod numerics;
pub mod qmetric;
pub mod random;
pub mod suites;
pub mod torus;

pub use error::{Error, Result};
pub use algebra::{AlgebraElement, FiniteAlgebra, Projection, State, StateSet};
pub use classical::{FiniteMetricSpace, Measure, Subset};
pub use hyper::{DistanceResult, HyperConfig, Method};
pub use numerics::{CMatrix, C64};
pub use qmetric::{Combine, CuttingPlaneConfig, RhoResult, Seminorm};
