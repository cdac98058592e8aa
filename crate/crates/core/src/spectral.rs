//! Unitary discrete Fourier transform on a periodic grid.
//!
//! Convention used throughout the crate:
//!
//! ```text
//! analysis:  c_k = N^{-1/2} Σ_j e^{+2πi jk/N} u_j
//! synthesis: u_j = N^{-1/2} Σ_k e^{-2πi jk/N} c_k
//! ```
//!
//! With `x_j = jL/N` the synthesis reads `u(x) = Σ_k c_k e^{-i κ_k x}` where
//! `κ_k = 2πk/L`, so multiplying `c_k` by `e^{+i κ_k c t}` transports the
//! profile by `+ct`, which is the phase the `Rz` layer applies. Storage index
//! `j` holds signed wavenumber `k(j) = j - N·[j ≥ N/2]`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Signed wavenumber held at storage index `j` of an `n_points` spectrum.
pub fn signed_wavenumber(j: usize, n_points: usize) -> i64 {
    if j < n_points / 2 {
        j as i64
    } else {
        j as i64 - n_points as i64
    }
}

/// Cached FFT plans for one grid size.
#[derive(Clone)]
pub struct SpectralOps {
    n_points: usize,
    // rustfft's "forward" kernel is e^{-2πi jk/N}, i.e. our synthesis.
    synth: Arc<dyn Fft<f64>>,
    analysis: Arc<dyn Fft<f64>>,
    norm: f64,
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps")
            .field("n_points", &self.n_points)
            .finish()
    }
}

impl SpectralOps {
    pub fn new(n_points: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n_points,
            synth: planner.plan_fft_forward(n_points),
            analysis: planner.plan_fft_inverse(n_points),
            norm: 1.0 / (n_points as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn analyze_in_place(&self, buf: &mut [Complex64]) {
        self.analysis.process(buf);
        buf.iter_mut().for_each(|c| *c *= self.norm);
    }

    pub fn synthesize_in_place(&self, buf: &mut [Complex64]) {
        self.synth.process(buf);
        buf.iter_mut().for_each(|c| *c *= self.norm);
    }

    pub fn analyze_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.analyze_in_place(&mut buf);
        buf
    }

    pub fn synthesize_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.synthesize_in_place(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Multiplier `(-i κ_k)^order` applied to `c_k` by `∂_x^order`.
    ///
    /// The Nyquist mode has no real derivative of odd order and is zeroed.
    pub fn derivative_multipliers(&self, order: u32, length: f64) -> Vec<Complex64> {
        let scale = 2.0 * std::f64::consts::PI / length;
        (0..self.n_points)
            .map(|j| {
                let k = signed_wavenumber(j, self.n_points);
                if order % 2 == 1 && 2 * k.unsigned_abs() as usize == self.n_points {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(0.0, -(k as f64) * scale).powu(order)
            })
            .collect()
    }

    /// Spectral derivative of a real periodic field.
    pub fn derivative(&self, values: &[f64], order: u32, length: f64) -> Vec<f64> {
        let coeffs = self.analyze_real(values);
        self.derivative_from_coeffs(&coeffs, order, length)
    }

    pub fn derivative_from_coeffs(&self, coeffs: &[Complex64], order: u32, length: f64) -> Vec<f64> {
        let mult = self.derivative_multipliers(order, length);
        let scaled: Vec<Complex64> = coeffs.iter().zip(&mult).map(|(c, m)| c * m).collect();
        self.synthesize_real(&scaled)
    }
}
