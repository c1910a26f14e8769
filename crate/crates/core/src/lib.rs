//! Non-Markovian finite-temperature dynamics of the pure-dephasing spin-boson
//! model.
//!
//! The crate computes one-time expectation values and two-time correlation
//! functions `<A(t1) B(t2)>` of qubit operators coupled through `sigma_z` to a
//! thermal ohmic bath, in two independent ways:
//!
//! * [`exact`]: closed-form operator results built on the bath kernels
//!   `D(t)`, `Gamma(t)` and the cross-time kernel `D~(t1, t2)`;
//! * [`evolution`]: second-order (TCL2) evolution equations integrated with
//!   fixed-step RK4, under full non-Markovian coefficients, the quantum
//!   regression (QRT) approximation, or a Markovian constant rate.
//!
//! Units: `hbar = k_B = 1`; frequencies, temperatures and inverse times share
//! the unit fixed by `omega_s` (usually `omega_s = 1`).

pub mod error;
pub mod evolution;
pub mod exact;
pub mod kernels;
pub mod model;
pub mod quadrature;

pub use error::{Error, Result};
pub use evolution::{CfSample, CfTrajectory, Evolver, MarkovianSeed, Mode, SingleTimeSample, SingleTimeTrajectory};
pub use exact::ExactContext;
pub use kernels::{build_cache, build_cache_from, cross_kernel, markovian_rate, KernelCache, SpectralDensity};
pub use model::{expectation, pauli_product, DensityMatrix, ModelParams, Pauli, SpinOperator, TimeGrid};

pub use num_complex::Complex64;
