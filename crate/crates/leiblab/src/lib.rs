//! Numerical and exact-arithmetic laboratory for standard-deviation seminorms
//! on matrix algebras.
//!
//! The library is organized around one question: which seminorms built from a
//! state `mu` on `M_d` (or from a conditional expectation onto `M_n`) satisfy
//! Leibniz, strongly Leibniz, and Markov inequalities, and which operator
//! realizations compute them exactly.
//!
//! * [`linalg`]: dense complex matrices, Jacobi eigensolvers, one-sided Jacobi
//!   SVD, Kronecker products, functional calculus.
//! * [`ncprob`]: states, the `mu`-norm and standard deviation `sigma_mu`, the
//!   GNS coordinate space and its rank-one Dirac realizations.
//! * [`condexp`]: conditional expectations `M_n(A) -> M_n`, the module norm
//!   they induce, matricial seminorm families, localizations.
//! * [`duality`]: the two independent solvers behind the minimax identity
//!   `min_alpha ||A - alpha|| = max_rho ||A - mu_rho(A)||_rho`.
//! * [`shiftlab`]: exact rational verification of the bilateral-shift
//!   counterexamples on l2(Z) windows.
//! * [`harness`]: randomized margin suites, deterministic reports, the
//!   open-question search.
//! * [`io`]: text formats for matrices, states, and module elements.

pub mod condexp;
pub mod duality;
#[cfg(test)]
pub(crate) mod testutil;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod ncprob;
pub mod shiftlab;

use thiserror::Error;

/// Crate-wide error taxonomy.
///
/// Operations distinguish data that was never valid (`Malformed`, `DimMismatch`,
/// `Config`), inputs outside an operation's mathematical domain (`Domain`,
/// `Singular`, `NonFaithful`, `NonTracial`), solver failures that carry their
/// best answer so far (`Solver`), and checks the library performs on its own
/// output (`Internal`).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("dimension mismatch: {left} vs {right} in {context}")]
    DimMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix: smallest singular value {sigma_min:.3e} below {threshold:.3e}")]
    Singular { sigma_min: f64, threshold: f64 },

    #[error("state is not faithful: smallest eigenvalue {min_eig:.3e} < {threshold:.3e}")]
    NonFaithful { min_eig: f64, threshold: f64 },

    #[error("state is not tracial: ||rho - I/d|| = {distance:.3e}")]
    NonTracial { distance: f64 },

    #[error("solver failed after {iterations} iterations: {message} (best so far {best:.6e})")]
    Solver {
        message: String,
        best: f64,
        iterations: usize,
    },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
