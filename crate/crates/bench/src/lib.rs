//! Shared fixtures for the kernel benchmarks.

use qconv_core::discovery::{build_design, DesignMatrix, SnapshotDataset, TermLibrary};
use qconv_core::field::random_initial_condition;
use qconv_core::noise::simulate_noisy;
use qconv_core::quantum::Reconstruction;
use qconv_core::{DensityMatrix, NoisyStepConfig, ProblemSpec, StateVector};

/// Pure state of the random initial condition `seed` on `qubits` qubits, as a density matrix.
pub fn initial_density(qubits: usize, seed: u64) -> DensityMatrix {
    let spec = ProblemSpec::with_qubits(qubits).expect("valid register");
    let f0 = random_initial_condition(seed, &spec).expect("valid spec");
    let norm = f0.l2_norm();
    let amps = f0.values.iter().map(|v| (v / norm).into()).collect();
    DensityMatrix::from_pure(&StateVector::new(amps).expect("normalised"))
}

/// Noisy dataset with `steps` snapshots after the first.
pub fn noisy_dataset(qubits: usize, seed: u64, steps: usize) -> SnapshotDataset {
    let spec = ProblemSpec::with_qubits(qubits).expect("valid register");
    let f0 = random_initial_condition(seed, &spec).expect("valid spec");
    let cfg = NoisyStepConfig::from_kind(qconv_core::ChannelKind::Depolarizing, 8.3e-4).expect("valid channel");
    let run = simulate_noisy(&f0, steps, &cfg, Reconstruction::CoherentProjection).expect("simulation");
    SnapshotDataset::from_fields(&run.fields, Default::default()).expect("dataset")
}

pub fn design(ds: &SnapshotDataset) -> DesignMatrix {
    build_design(ds, &TermLibrary::standard(), 1).expect("design")
}
