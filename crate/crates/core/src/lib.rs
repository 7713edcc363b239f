//! Numerical laboratory for blow-up in the four-dimensional
//! Brezis–Nirenberg problem −Δu = u³ + εVu on a bounded domain.
//!
//! The crate builds the standard bubble ansatz, evaluates the domain's
//! Robin function, solves the reduced finite-dimensional system that
//! predicts the concentration point ξ₀ and the exponential rate
//! δ(ε) = e^{−t₀/ε}, and checks every quantitative expansion against
//! independent quadrature plus a radial shooting solver.

pub mod bubbles;
pub mod constants;
pub mod domain;
pub mod fit;
pub mod quad;
pub mod radialode;
pub mod reduced;
pub mod verify;

pub use bubbles::{BubbleError, BubbleParams};
pub use constants::Constants;
pub use domain::{DomainError, DomainModel, Potential};
pub use quad::{QuadError, QuadratureSpec, Scheme};
pub use radialode::{RadialPotential, RadialProblem, RadialSolveResult, ShootOptions};
pub use reduced::{ReducedError, ReducedSolution};
pub use verify::{ExpansionReport, PohozaevReport, VerifyError};
