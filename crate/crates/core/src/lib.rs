//! Γ-divergence between probability measures.
//!
//! The Γ-divergence of `μ` with respect to `ν` is
//!
//! ```text
//! G(μ‖ν) = sup_{g ∈ Γ} { ∫g dμ − log ∫e^g dν }
//!        = inf_γ { R(γ‖ν) + W_c(μ, γ) }
//! ```
//!
//! where `Γ` is the class of `c`-Lipschitz test functions, `R` is relative
//! entropy and `W_c` is the optimal-transport cost. Unlike relative entropy it
//! stays finite when `μ` is not absolutely continuous with respect to `ν`.
//!
//! The crate is organised bottom-up:
//!
//! - [`measures`]: finitely supported measures, grid densities, JSON ingestion.
//! - [`transport`]: cost specifications, exact network-simplex transport,
//!   Kantorovich potentials and the 1-D CDF formula.
//! - [`entropy`]: relative entropy, the log-moment generating functional and
//!   exponential tilting.
//! - [`gammadiv`]: primal and dual solvers, optimality verification,
//!   directional derivatives and scaling limits.
//! - [`closedforms`]: exactly solvable pairs used as references and oracles.
//! - [`uqstatic`]: static uncertainty-quantification bounds and the
//!   variance-constrained sensitivity problem.
//! - [`uqdiffusion`]: average-cost bounds for perturbed Gauss-Markov chains and
//!   a reproducible simulator.

pub mod closedforms;
pub mod entropy;
mod error;
pub mod gammadiv;
mod linalg;
pub mod measures;
mod quad;
mod scalar;
pub mod tolerance;
pub mod transport;
pub mod uqdiffusion;
pub mod uqstatic;

pub use error::{Error, Result};
pub use tolerance::Tolerances;

/// Version string embedded in every serialized report.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));
