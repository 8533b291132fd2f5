//! Numerical lab for monotone, translation-equivariant functionals on finite
//! spaces: evaluation, rate-function duals, convex conjugates, randomized
//! axiom checks, and exact binomial large-deviation experiments.

pub mod axioms;
pub mod convex_duality;
pub mod duality;
pub mod error;
pub mod extended;
pub mod functionals;
pub mod ldp_lab;
pub mod numeric;
pub mod sampling;
pub mod space;

pub use error::{Error, Result};
pub use functionals::{Capabilities, Functional, FunctionalHandle};
pub use space::{BoundedFunction, FiniteSpace, ProbabilityMeasure, RateFunction};
