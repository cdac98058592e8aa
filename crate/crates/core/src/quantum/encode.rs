use num_complex::Complex64;

use super::state::{DensityMatrix, StateVector};
use crate::error::{Error, Result};
use crate::field::{GridField, ProblemSpec};
use crate::spectral::SpectralOps;

#[derive(Debug, Clone, PartialEq)]
pub enum QState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QState {
    pub fn dim(&self) -> usize {
        match self {
            QState::Pure(s) => s.dim(),
            QState::Mixed(r) => r.dim(),
        }
    }
}

/// Amplitude-encoded field together with the norm needed to decode it.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedState {
    pub state: QState,
    pub norm_scale: f64,
    pub spec: ProblemSpec,
    pub time: f64,
}

/// How a field is read back out of a mixed state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reconstruction {
    /// `u_j = s·Re⟨j|ρ|ψ_ref⟩ / √⟨ψ_ref|ρ|ψ_ref⟩`
    #[default]
    CoherentProjection,
    /// `u_j = s·sign(Re ψ_ref,j)·√⟨j|ρ|j⟩`
    SignedDiagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub field: GridField,
    /// Largest discarded imaginary part (pure states only; zero otherwise).
    pub imaginary_residue: f64,
}

/// `amplitudes = values / ‖values‖`, `norm_scale = ‖values‖`.
pub fn encode(field: &GridField) -> Result<EncodedState> {
    let norm = field.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let amps = field
        .values
        .iter()
        .map(|&v| Complex64::new(v / norm, 0.0))
        .collect();
    Ok(EncodedState {
        state: QState::Pure(StateVector::normalized(amps)?),
        norm_scale: norm,
        spec: field.spec,
        time: field.time,
    })
}

pub fn decode(enc: &EncodedState, reference: Option<&StateVector>) -> Result<Decoded> {
    decode_with(enc, reference, Reconstruction::default())
}

/// Reads a field out of an encoded state. Mixed states need the ideal
/// physical-space state at the same time as `reference`.
pub fn decode_with(
    enc: &EncodedState,
    reference: Option<&StateVector>,
    mode: Reconstruction,
) -> Result<Decoded> {
    let (values, residue) = match &enc.state {
        QState::Pure(psi) => {
            let residue = psi.amplitudes().iter().fold(0.0f64, |m, a| m.max(a.im.abs()));
            let values = psi
                .amplitudes()
                .iter()
                .map(|a| a.re * enc.norm_scale)
                .collect();
            (values, residue * enc.norm_scale)
        }
        QState::Mixed(rho) => {
            let reference = reference.ok_or(Error::MissingReference)?;
            if reference.dim() != rho.dim() {
                return Err(Error::DimensionMismatch {
                    expected: rho.dim(),
                    actual: reference.dim(),
                });
            }
            let values = match mode {
                Reconstruction::CoherentProjection => {
                    let w = rho.apply_to(reference.amplitudes());
                    project(&w, reference.amplitudes(), enc.norm_scale)?
                }
                Reconstruction::SignedDiagonal => rho
                    .diagonal()
                    .iter()
                    .zip(reference.amplitudes())
                    .map(|(p, r)| enc.norm_scale * sign(r.re) * p.max(0.0).sqrt())
                    .collect(),
            };
            (values, 0.0)
        }
    };
    Ok(Decoded {
        field: GridField::new(values, enc.time, enc.spec)?,
        imaginary_residue: residue,
    })
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `s·Re(w_j)/√Re⟨ref|w⟩` with `w = ρ·ref` already computed.
fn project(w: &[Complex64], reference: &[Complex64], norm_scale: f64) -> Result<Vec<f64>> {
    let overlap: f64 = reference
        .iter()
        .zip(w)
        .map(|(r, x)| r.conj() * x)
        .sum::<Complex64>()
        .re;
    if overlap <= 0.0 || !overlap.is_finite() {
        return Err(Error::InvalidState(format!(
            "state has no overlap with the reference trajectory ({overlap})"
        )));
    }
    let scale = norm_scale / overlap.sqrt();
    Ok(w.iter().map(|x| x.re * scale).collect())
}

/// Coherent projection evaluated without leaving spectral space.
///
/// The projection is basis independent: `⟨j|V ρ̂ V†|ψ⟩ = (V ρ̂ ψ̂)_j` for the
/// inverse transform `V`, so only one vector transform is needed per snapshot.
pub fn coherent_projection_spectral(
    rho_spectral: &DensityMatrix,
    reference_spectral: &[Complex64],
    norm_scale: f64,
    ops: &SpectralOps,
) -> Result<Vec<f64>> {
    let mut w = rho_spectral.apply_to(reference_spectral);
    let overlap: Complex64 = reference_spectral
        .iter()
        .zip(&w)
        .map(|(r, x)| r.conj() * x)
        .sum();
    ops.synthesize_in_place(&mut w);
    if overlap.re <= 0.0 || !overlap.re.is_finite() {
        return Err(Error::InvalidState(format!(
            "state has no overlap with the reference trajectory ({})",
            overlap.re
        )));
    }
    let scale = norm_scale / overlap.re.sqrt();
    Ok(w.iter().map(|x| x.re * scale).collect())
}
