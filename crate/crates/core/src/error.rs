use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which loci of the reduced first-order system a trajectory can run into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SingularLine {
    /// `y = 0`: simple pole of `y_z` on the principal sheet.
    Zero,
    /// `y = q/(4b)`: square-root branch point, the discriminant curve.
    BranchPoint,
    /// `y = ∞`: second-order pole.
    Infinity,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "degenerate denominator {value:e} (guard {guard:e}): outside the model's validity region"
    )]
    DegenerateDenominator { value: f64, guard: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),

    #[error("integration constant c = 0 is excluded (it reduces to the trivial families)")]
    ZeroC,

    #[error("z = {z} outside the family domain (boundary z* = {boundary})")]
    OutOfDomain { z: f64, boundary: f64 },

    #[error("nonlinear family requested with b = 0; for b = 0 the reduced equation is linear with solutions d1 + d2*exp(-3z/4)")]
    ZeroB,

    #[error("symmetry action divides by a1 = 0; use the general-lambda form instead")]
    SingularAction,

    #[error("y = 0 is a singular line of the reduced system")]
    SingularY,

    #[error("negative radicand {0:e}")]
    NegativeRadicand(f64),

    #[error("trajectory reached singular line {line:?} at z = {z}, y = {y}")]
    SingularEncounter { line: SingularLine, z: f64, y: f64 },

    #[error("quadrature path crosses a pole at p = {0}")]
    PoleOnPath(f64),

    #[error("Newton iteration failed at step {step} after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence {
        step: usize,
        iterations: usize,
        residual: f64,
        /// Last Newton iterate, for post-mortem inspection.
        iterate: Vec<f64>,
    },

    #[error(
        "denominator breach at step {step}, node {node} (S = {s}): 1 - rho*S*u_SS = {value:e}"
    )]
    DenominatorBreach {
        step: usize,
        node: usize,
        s: f64,
        value: f64,
    },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for errors that signal the model left its validity region or a
    /// point lies outside a solution's domain (as opposed to bad input).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDenominator { .. }
                | Error::OutOfDomain { .. }
                | Error::NonPositivePrice(_)
                | Error::SingularEncounter { .. }
                | Error::PoleOnPath(_)
                | Error::NewtonDivergence { .. }
                | Error::DenominatorBreach { .. }
                | Error::NegativeRadicand(_)
                | Error::SingularY
        )
    }
}
