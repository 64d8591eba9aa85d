//! Spectral simulation of the expectation-coupled cubic Schrödinger equation
//!
//! ```text
//! i ∂t X = −ΔX ± E(|X|²) X
//! ```
//!
//! for a random field `X` on a periodic box, together with the density-operator
//! form `i ∂t γ = [−Δ ± ρ_γ, γ]` of the same flow.
//!
//! The random field is carried either exactly, as a finite mode expansion
//! `X = Σ √λ_n g_n u_n` with independent complex Gaussians `g_n`
//! ([`ModeEnsemble`]), or by sampled realizations ([`MonteCarloEnsemble`]).
//! Both are advanced by the same Strang splitting, whose potential substep is
//! exact because every member sees the same real potential.
//!
//! Modules:
//! - [`grid`], [`field`]: periodic grids, transforms, Sobolev norms, free flow.
//! - [`ensemble`], [`covariance`]: mode and Monte Carlo ensembles, densities,
//!   Gaussian sampling, covariance extraction.
//! - [`dynamics`]: Strang stepping, trajectories, blow-up monitoring and the
//!   perturbed-equilibrium system.
//! - [`equilibria`]: torus equilibria and their closed-form phases.
//! - [`diagnostics`]: mass, energy, modified energy, virial, Morawetz and
//!   scattering-profile quantities.
//! - [`operator`]: density-matrix propagation and the Bures–Wasserstein metric.
//! - [`sphere`]: the spherical-harmonic kernel identity on S².

pub mod covariance;
pub mod diagnostics;
pub mod dynamics;
pub mod ensemble;
pub mod equilibria;
mod error;
pub mod field;
pub mod grid;
pub mod numerics;
pub mod operator;
pub mod sphere;

pub use covariance::{Basis, CovarianceMatrix};
pub use diagnostics::{DiagnosticsRecord, ModifiedEnergy};
pub use dynamics::{EvolutionConfig, Probe, Sign, Termination, Trajectory};
pub use ensemble::{Ensemble, ModeEnsemble, MonteCarloEnsemble};
pub use equilibria::EquilibriumSpec;
pub use error::{Error, Result};
pub use field::{Field, Repr, ScalarField};
pub use grid::{GridSpec, TorusGrid};
pub use operator::OperatorState;
pub use sphere::SphereSample;

/// Complex scalar used for all field values.
pub type C64 = num_complex::Complex64;
