//! Numerical laboratory for the nonlinear Black-Scholes equations that arise
//! when a large trader's hedging moves the price of an illiquid underlying.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] evaluates the PDE catalogue pointwise on a caller-supplied
//!   2-jet of a candidate solution.
//! * [`cubic`] finds the real roots of the uniformizing cubics.
//! * [`exact`] evaluates every invariant solution family of the reduced-form
//!   SDE model in closed form, together with domains, Deltas, symmetry
//!   transforms and large/small-`S` expansions.
//! * [`reduction`] holds the general reduction machinery: reduced ODE,
//!   factored first-order system, singular lines and a numeric integrator.
//! * [`solver`] is an implicit theta-scheme/Newton solver for the terminal
//!   value problem on a log-price grid, benchmarked against [`exact`].

pub mod cubic;
pub mod error;
pub mod exact;
pub mod model;
pub mod quad;
pub mod reduction;
pub mod solver;

pub use error::{Error, Result};
pub use exact::{FamilyKind, SolutionFamily};
pub use model::{Jet2, ModelKind, ModelParams};
