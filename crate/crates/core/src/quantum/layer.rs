use std::f64::consts::PI;

use num_complex::Complex64;

use crate::field::ProblemSpec;

/// One time step of the convection circuit: a global phase and one `Rz` per qubit.
///
/// Angles are `α_q = a·2^q` for `q < n-1` and `α_{n-1} = -a·2^{n-1}` with
/// `a = cΔt·2π/L`; the global phase is `-cΔt·π/L`. Together they realise
/// `exp(i a D)` where `D` is diagonal with the signed wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionLayer {
    pub angles: Vec<f64>,
    pub global_phase: f64,
}

/// `Rz(θ) = diag(e^{-iθ/2}, e^{iθ/2})`.
pub fn rz(theta: f64) -> [Complex64; 2] {
    [
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::from_polar(1.0, theta / 2.0),
    ]
}

impl EvolutionLayer {
    pub fn for_spec(spec: &ProblemSpec) -> Self {
        Self::with_dt(spec, spec.dt)
    }

    /// Layer for a step of `dt` instead of `spec.dt`.
    pub fn with_dt(spec: &ProblemSpec, dt: f64) -> Self {
        let n = spec.qubits();
        let a = spec.speed * dt * 2.0 * PI / spec.length;
        let angles = (0..n)
            .map(|q| {
                let mag = a * (1u64 << q) as f64;
                if q + 1 == n {
                    -mag
                } else {
                    mag
                }
            })
            .collect();
        Self {
            angles,
            global_phase: -spec.speed * dt * PI / spec.length,
        }
    }

    pub fn qubits(&self) -> usize {
        self.angles.len()
    }

    /// Diagonal of the composed unitary, built as the tensor product of the
    /// individual `Rz` gates times the global phase.
    pub fn diagonal(&self) -> Vec<Complex64> {
        let mut diag = vec![Complex64::from_polar(1.0, self.global_phase)];
        for &theta in &self.angles {
            let gate = rz(theta);
            // qubit q is bit q: the new factor becomes the most significant bit so far
            let mut next = Vec::with_capacity(diag.len() * 2);
            for g in gate {
                next.extend(diag.iter().map(|d| g * d));
            }
            diag = next;
        }
        diag
    }
}
