//! Pure and mixed register states, the QFT and the `Rz` evolution layer.
//!
//! The QFT is applied as an exact unitary transform (see [`crate::spectral`]
//! for the sign convention); only the evolution layers are ever noisy.

mod encode;
mod layer;
mod state;

pub use encode::{
    coherent_projection_spectral, decode, decode_with, encode, Decoded, EncodedState, QState,
    Reconstruction,
};
pub use layer::{rz, EvolutionLayer};
pub use state::{DensityMatrix, StateVector};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::spectral::SpectralOps;

/// Operations shared by pure and mixed register states.
pub trait QuantumState: Sized {
    fn num_qubits(&self) -> usize;

    /// Computational-basis populations.
    fn probabilities(&self) -> Vec<f64>;

    /// Physical space to spectral space.
    fn qft(&self) -> Self;

    /// Spectral space back to physical space.
    fn iqft(&self) -> Self;

    /// Applies one evolution layer (diagonal unitary).
    fn apply_layer(&self, layer: &EvolutionLayer) -> Result<Self>;
}

fn check_layer(qubits: usize, layer: &EvolutionLayer) -> Result<()> {
    if layer.qubits() != qubits {
        return Err(Error::DimensionMismatch {
            expected: qubits,
            actual: layer.qubits(),
        });
    }
    Ok(())
}

impl QuantumState for StateVector {
    fn num_qubits(&self) -> usize {
        self.qubits()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.amplitudes().iter().map(|a| a.norm_sqr()).collect()
    }

    fn qft(&self) -> Self {
        let mut out = self.clone();
        SpectralOps::new(self.dim()).analyze_in_place(out.amplitudes_mut());
        out
    }

    fn iqft(&self) -> Self {
        let mut out = self.clone();
        SpectralOps::new(self.dim()).synthesize_in_place(out.amplitudes_mut());
        out
    }

    fn apply_layer(&self, layer: &EvolutionLayer) -> Result<Self> {
        check_layer(self.qubits(), layer)?;
        let mut out = self.clone();
        apply_diagonal_to_vector(out.amplitudes_mut(), &layer.diagonal());
        Ok(out)
    }
}

impl QuantumState for DensityMatrix {
    fn num_qubits(&self) -> usize {
        self.qubits()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.diagonal()
    }

    fn qft(&self) -> Self {
        let mut out = self.clone();
        conjugate_by_transform(&mut out, &SpectralOps::new(self.dim()), true);
        out
    }

    fn iqft(&self) -> Self {
        let mut out = self.clone();
        conjugate_by_transform(&mut out, &SpectralOps::new(self.dim()), false);
        out
    }

    fn apply_layer(&self, layer: &EvolutionLayer) -> Result<Self> {
        check_layer(self.qubits(), layer)?;
        let mut out = self.clone();
        apply_diagonal_to_density(&mut out, &layer.diagonal());
        Ok(out)
    }
}

pub(crate) fn apply_diagonal_to_vector(amps: &mut [Complex64], diag: &[Complex64]) {
    amps.iter_mut().zip(diag).for_each(|(a, d)| *a *= d);
}

/// `ρ ← U ρ U†` for diagonal `U`.
pub(crate) fn apply_diagonal_to_density(rho: &mut DensityMatrix, diag: &[Complex64]) {
    let dim = rho.dim();
    let conj: Vec<Complex64> = diag.iter().map(|d| d.conj()).collect();
    for (row, di) in rho.entries_mut().chunks_exact_mut(dim).zip(diag) {
        for (x, dj) in row.iter_mut().zip(&conj) {
            *x *= di * dj;
        }
    }
}

/// `ρ ← F ρ F†` with `F` the analysis transform (`forward`) or its inverse.
fn conjugate_by_transform(rho: &mut DensityMatrix, ops: &SpectralOps, forward: bool) {
    let dim = rho.dim();
    let transform = |buf: &mut [Complex64]| {
        if forward {
            ops.analyze_in_place(buf)
        } else {
            ops.synthesize_in_place(buf)
        }
    };
    let data = rho.entries_mut();
    let mut col = vec![Complex64::new(0.0, 0.0); dim];
    for c in 0..dim {
        for r in 0..dim {
            col[r] = data[r * dim + c];
        }
        transform(&mut col);
        for r in 0..dim {
            data[r * dim + c] = col[r];
        }
    }
    // right multiplication by F†: row ← conj(F conj(row))
    for row in data.chunks_exact_mut(dim) {
        row.iter_mut().for_each(|x| *x = x.conj());
        transform(row);
        row.iter_mut().for_each(|x| *x = x.conj());
    }
}

/// Noiseless pipeline: encode, QFT, `steps` layers, inverse QFT, decode.
///
/// Returns the `steps + 1` snapshots at `t0, t0 + Δt, …`.
pub fn simulate_ideal(ic: &GridField, steps: usize) -> Result<Vec<GridField>> {
    let spec = ic.spec;
    let enc = encode(ic)?;
    let QState::Pure(psi) = &enc.state else {
        unreachable!("encode always yields a pure state")
    };
    let ops = SpectralOps::new(spec.points);
    let diag = EvolutionLayer::for_spec(&spec).diagonal();
    let mut spectral = psi.amplitudes().to_vec();
    ops.analyze_in_place(&mut spectral);

    let mut out = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        if step > 0 {
            apply_diagonal_to_vector(&mut spectral, &diag);
        }
        let mut physical = spectral.clone();
        ops.synthesize_in_place(&mut physical);
        let values = physical.iter().map(|a| a.re * enc.norm_scale).collect();
        out.push(GridField::new(
            values,
            ic.time + step as f64 * spec.dt,
            spec,
        )?);
    }
    Ok(out)
}
