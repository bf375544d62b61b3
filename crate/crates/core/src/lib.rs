//! Numerical study of the quasilinear wave equation
//!
//! ∂t²u = c(u)² ∂x²u + λ c(u)c′(u) (∂xu)²,   0 ≤ λ ≤ 2,
//!
//! for wave speeds c with c(−1) = 0, c, c′ > 0 above −1. The equation is
//! evolved as the first-order system in the Riemann variables
//!
//! R = ∂tu + c(u)∂xu,   S = ∂tu − c(u)∂xu,
//!
//! with upwind transport and pointwise sources. The solver watches for the
//! two ways a smooth solution can end: degeneracy (c(u) → 0 somewhere) and
//! gradient blow-up. Alongside the solver, this crate computes the
//! functionals that control the continuum behavior — the antiderivatives
//! G, G̃, G₂ of the wave speed, the integrated invariants w₁, w₂, v₁, v₂
//! and their transport identities along characteristics, the energy density
//! ẽ = c c′ (∂xu)², the mean functional F and its cutoff-localized variant —
//! so the qualitative statements (sign preservation of R and S, Lᵖ decay,
//! finite-time degeneracy for λ < 2, the mass threshold at λ = 2) can be
//! checked on desk-scale grids.
//!
//! Modules follow the pipeline: [`wavespeed`] (the function c and its
//! antiderivatives), [`initdata`] (profiles and admissibility), [`solver`]
//! (time stepping and termination), [`characteristics`] and [`diagnostics`]
//! (post-hoc functionals), [`scenario`] and [`harness`] (configuration,
//! sweeps, threshold bisection, persistence).

pub mod characteristics;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod initdata;
pub mod numerics;
pub mod scenario;
pub mod solver;
pub mod wavespeed;

pub use error::CoreError;
pub use grid::{DiscreteField, GridSpec};
pub use initdata::{AdmissibilityReport, ProfileSpec};
pub use scenario::Scenario;
pub use solver::{SolverConfig, State, TerminationReason, TerminationReport, Trajectory};
pub use wavespeed::{WaveSpeedModel, WaveSpeedSpec};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
