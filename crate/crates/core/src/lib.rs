//! Solvers for fully non-linear elliptic equations of eigenvalue type,
//! `f(λ(θ + i∂∂̄u)) = h`, on flat complex tori, together with the
//! penalization scheme for C^{1,1} envelopes of (θ,m)-subharmonic
//! functions.
//!
//! The crate is organized around:
//!
//! - [`eigen_ops`]: the operator catalog (Monge-Ampère, complex Hessian,
//!   Hessian quotient, (n−1)-Monge-Ampère) as concave symmetric functions
//!   of Hermitian eigenvalues, with analytic derivatives and ray limits.
//! - [`cones`]: Gårding-type cone membership, the Trudinger cone Γ̃, and
//!   C-subsolution certification.
//! - [`torus_field`]: periodic grids, spectral i∂∂̄ and real Hessians,
//!   batched pointwise Hermitian eigendecomposition, discrete norms.
//! - [`newton_solver`]: damped Newton–Krylov solution of the
//!   non-degenerate equation and the degenerate eigenvalue pair (u, c).
//! - [`envelope`]: the penalized equation log σ_m = (u−h)/ε along a
//!   decreasing ε schedule, contact sets, and free-boundary residuals.
//! - [`diagnostics`]: the monitored maximum-principle quantities
//!   (L, ρ, ξ, η, Q) and ε-trend fits.
//! - [`oracles`]: independent brute-force references used by the test
//!   and verification suites.
//! - [`config`] / [`runner`] / [`verify`]: the configuration-driven entry
//!   points behind the CLI.

pub mod cones;
pub mod config;
pub mod diagnostics;
pub mod eigen_ops;
pub mod envelope;
pub mod error;
pub mod newton_solver;
pub mod oracles;
pub mod runner;
pub mod torus_field;
pub mod verify;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
