//! Single-qubit noise channels and noisy stepping of the convection circuit.
//!
//! Every qubit receives one `Rz` per layer, so noise is attached as one
//! channel instance per qubit after each layer, applied in qubit order.

mod channel;

pub use channel::{
    apply_channel, make_channel, ChannelKind, Mat2, NoiseChannel, IDENTITY, PAULI_X, PAULI_Y,
    PAULI_Z,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::quantum::{
    apply_diagonal_to_density, apply_diagonal_to_vector, coherent_projection_spectral, decode_with,
    encode, DensityMatrix, EncodedState, EvolutionLayer, QState, QuantumState, Reconstruction,
    StateVector,
};
use crate::spectral::SpectralOps;

/// Identical, independent noise on every qubit after each evolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyStepConfig {
    pub channel: NoiseChannel,
}

impl NoisyStepConfig {
    pub fn new(channel: NoiseChannel) -> Self {
        Self { channel }
    }

    pub fn from_kind(kind: ChannelKind, strength: f64) -> Result<Self> {
        Ok(Self::new(make_channel(kind, strength)?))
    }
}

/// Reusable stepping kernel: the layer diagonal and channel superoperator are
/// computed once.
#[derive(Debug, Clone)]
pub struct NoisyStepper {
    diagonal: Vec<Complex64>,
    superop: [[Complex64; 4]; 4],
    qubits: usize,
}

impl NoisyStepper {
    pub fn new(layer: &EvolutionLayer, cfg: &NoisyStepConfig) -> Self {
        Self {
            diagonal: layer.diagonal(),
            superop: cfg.channel.superoperator(),
            qubits: layer.qubits(),
        }
    }

    pub fn step_in_place(&self, rho: &mut DensityMatrix) -> Result<()> {
        if rho.qubits() != self.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.qubits,
                actual: rho.qubits(),
            });
        }
        apply_diagonal_to_density(rho, &self.diagonal);
        for q in 0..self.qubits {
            channel::apply_superoperator_in_place(rho, &self.superop, q)?;
        }
        Ok(())
    }

    pub fn layer_diagonal(&self) -> &[Complex64] {
        &self.diagonal
    }
}

/// One noisy layer: the ideal `Rz` layer followed by the channel on every qubit.
pub fn noisy_step(
    rho: &DensityMatrix,
    layer: &EvolutionLayer,
    cfg: &NoisyStepConfig,
) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    NoisyStepper::new(layer, cfg).step_in_place(&mut out)?;
    Ok(out)
}

/// Result of a noisy density-matrix run.
#[derive(Debug, Clone)]
pub struct NoisyRun {
    /// Decoded fields at every step, starting with the initial condition.
    pub fields: Vec<GridField>,
    /// Spectral populations `P` at every step.
    pub populations: Vec<Vec<f64>>,
    /// Final density matrix in spectral space.
    pub final_state: DensityMatrix,
}

/// Density-matrix counterpart of [`crate::quantum::simulate_ideal`].
///
/// The register is kept in spectral space between layers; each snapshot is
/// decoded against the ideal trajectory at the same step.
pub fn simulate_noisy(
    ic: &GridField,
    steps: usize,
    cfg: &NoisyStepConfig,
    mode: Reconstruction,
) -> Result<NoisyRun> {
    let spec = ic.spec;
    let enc = encode(ic)?;
    let QState::Pure(psi) = &enc.state else {
        unreachable!("encode always yields a pure state")
    };
    let ops = SpectralOps::new(spec.points);
    let stepper = NoisyStepper::new(&EvolutionLayer::for_spec(&spec), cfg);

    let mut reference = psi.qft().amplitudes().to_vec();
    let mut rho = DensityMatrix::from_pure(&StateVector::new(reference.clone())?);
    let mut fields = Vec::with_capacity(steps + 1);
    let mut populations = Vec::with_capacity(steps + 1);

    for step in 0..=steps {
        if step > 0 {
            stepper.step_in_place(&mut rho)?;
            apply_diagonal_to_vector(&mut reference, stepper.layer_diagonal());
        }
        let time = ic.time + step as f64 * spec.dt;
        let values = match mode {
            Reconstruction::CoherentProjection => {
                coherent_projection_spectral(&rho, &reference, enc.norm_scale, &ops)?
            }
            Reconstruction::SignedDiagonal => {
                let mut physical_ref = reference.clone();
                ops.synthesize_in_place(&mut physical_ref);
                let snapshot = EncodedState {
                    state: QState::Mixed(rho.iqft()),
                    norm_scale: enc.norm_scale,
                    spec,
                    time,
                };
                let reference = StateVector::new(physical_ref)?;
                decode_with(&snapshot, Some(&reference), mode)?.field.values
            }
        };
        fields.push(GridField::new(values, time, spec)?);
        populations.push(rho.diagonal());
    }
    Ok(NoisyRun {
        fields,
        populations,
        final_state: rho,
    })
}
