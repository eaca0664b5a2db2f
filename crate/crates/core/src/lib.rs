pub mod coeff;
pub mod deform;
pub mod diagnostics;
pub mod error;
pub mod expfun;
pub mod golden;
pub mod operators;
pub mod problem;
pub mod problems;
mod quad;
pub mod reference;
pub mod residual;

pub use coeff::{Coeff, MpFloat, Numeric, SymbolicH};
pub use deform::HomotopySeries;
pub use error::{HamError, Result};
pub use expfun::{ExpPoly, Monomial, Rate, Window};
pub use operators::{BoundaryCondition, CharRoot, LinearOp};
pub use problem::{Constraint, NonlinearOp, NormSpec, ReducedProblem, SpatialFactor};
