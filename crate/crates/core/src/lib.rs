//! Calculus of finite metric random walk spaces.
//!
//! A [`Space`] couples a metric, a Markov kernel and a reversible invariant
//! measure. On top of it the crate provides the heat semigroup, nonlocal
//! perimeter and total variation, spectral gap and Cheeger constant,
//! Bakry-Émery and Ollivier-Ricci curvature, exact optimal transport, and
//! numerical checks of the functional inequalities that tie these together.

pub mod builders;
pub mod connectivity;
pub mod curvature;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod heat;
pub mod io;
pub mod linalg;
pub mod report;
pub mod space;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
pub use space::{
    convolve_kernel, propagate_measure, restrict_space, validate_space, Axiom, Metric, MetricKind,
    ScalarField, Space, Subset, ValidationReport,
};
