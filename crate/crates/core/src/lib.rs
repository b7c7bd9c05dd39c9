//! Second-order time-local master equation for a driven harmonic oscillator
//! coupled linearly to a boson bath, including the contribution of
//! system–bath correlations present in the initial thermal state.
//!
//! Units: ħ = k_B = 1.

pub mod bath;
pub mod error;
pub mod generator;
pub mod kernels;
pub mod operator;
pub mod oracle;
pub mod propagator;
pub mod quadrature;

pub use bath::{bose_occupation, discretize_ohmic, BathMode, BathSpec, OhmicParams, SpectralDensity};
pub use error::{Error, Result};
pub use generator::{
    build_generator, lindblad_generator, DriveKind, DriveSpec, EvolutionMode, Generator, SystemOperators,
};
pub use kernels::{kernel_coefficients, markov_limits, KernelCoefficients, MarkovLimits};
pub use operator::{DensityMatrix, FockOperator, Tolerances};
pub use oracle::{exact_reduced_dynamics, gibbs_expansion_check, projector_algebra_check, FullModel};
pub use propagator::{equilibrium_state, lindblad_propagate, propagate, PropagationOptions, Trajectory};
