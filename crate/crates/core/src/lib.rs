//! Numerical core for the pulse-driven parametrically driven Kerr resonator.
//!
//! A single bosonic mode with Kerr nonlinearity χ(a†a)², detuning Δ and a
//! degenerate parametric drive f(t)(Ω a†² + Ω* a²), damped at rate γ into a
//! bath with N thermal quanta. Units: ħ = 1 and all rates in multiples of γ.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs; parallel drivers, file formats and the CLI live in the `pdnr`
//! companion crate.
//!
//! Modules:
//! - [`fock`]: truncated Fock-space operators, pure states and density matrices.
//! - [`model`]: parameters, the Gaussian pulse train and the rotating-frame Hamiltonian.
//! - [`master`]: deterministic Lindblad integration.
//! - [`qsd`]: quantum-state-diffusion trajectories and ensemble averages.
//! - [`semiclassics`]: mean-field amplitude equation, thresholds and steady states.
//! - [`wigner`]: Wigner functions on phase-space grids, symmetry and hump analysis.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod fock;
pub mod linalg;
pub mod master;
pub mod model;
pub mod qsd;
pub mod semiclassics;
pub mod wigner;

mod banded;

pub use error::{Error, Result};
pub use fock::{expectation, DensityMatrix, FockOperator, FockState, PureState};
pub use linalg::CMatrix;
pub use model::{classify_regime, hamiltonian_at, pulse_envelope, Drive, ModelParams, PulseCount, PulseTrain, Regime};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Version string stamped into output directories.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
