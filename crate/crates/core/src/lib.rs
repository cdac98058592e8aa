//! Noise modelling for a quantum spectral simulation of 1D scalar convection.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`]: periodic grid fields, their Fourier spectra, exact transport and
//!   initial conditions.
//! - [`spectral`]: the unitary discrete Fourier transform shared by the quantum
//!   and classical code, plus spectral differentiation.
//! - [`quantum`]: state vectors, density matrices, the QFT and the `Rz` layer
//!   that advances the convection by one step.
//! - [`noise`]: single-qubit Kraus channels and noisy time stepping.
//! - [`transition`]: analytic and simulated transition matrices between basis
//!   populations, Hamming-distance profiles, shot sampling and readout mitigation.
//! - [`discovery`]: sparse regression of the effective right-hand side.
//! - [`solver`]: pseudo-spectral forward solver for discovered models and error maps.

pub mod discovery;
pub mod error;
pub mod field;
pub mod noise;
pub mod quantum;
pub mod solver;
pub mod spectral;
pub mod transition;

pub use discovery::{
    discover, sparse_regress, RegressionConfig, SnapshotDataset, SparseModel, Term, TermLibrary,
};
pub use error::{Error, Result};
pub use field::{GridField, InitialCondition, ProblemSpec};
pub use noise::{ChannelKind, NoiseChannel, NoisyStepConfig};
pub use quantum::{DensityMatrix, EncodedState, EvolutionLayer, QuantumState, StateVector};
pub use solver::{ErrorMap, SolverConfig};
pub use transition::{HammingProfile, ProbabilityVector, ReadoutModel, TransitionMatrix};

pub use num_complex::Complex64;
