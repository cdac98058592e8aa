use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "dimension {dim} is not a power of two >= 2"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Normalised pure state over `2^n` computational basis states.
///
/// Qubit `q` is bit `q` of the basis index (qubit 0 least significant).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    qubits: usize,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let qubits = qubits_for_dim(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, qubits })
    }

    /// Scales `amplitudes` to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(amplitudes)
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: index,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self::new(amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Debug dump: one `index re im` line per amplitude.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.amplitudes.iter().enumerate() {
            let _ = writeln!(out, "{i} {:.17e} {:.17e}", a.re, a.im);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() {
                continue;
            }
            if parts.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `index re im`", lineno + 1)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let idx: usize = parts[0]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            entries.push((idx, Complex64::new(parse(parts[1])?, parse(parts[2])?)));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); entries.len()];
        for (idx, a) in entries {
            *amplitudes
                .get_mut(idx)
                .ok_or_else(|| Error::Parse(format!("index {idx} out of range")))? = a;
        }
        Self::new(amplitudes)
    }
}

/// Dense `2^n × 2^n` density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Vec<Complex64>,
    dim: usize,
    qubits: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace; positivity is checked by [`Self::min_eigenvalue`].
    pub fn from_entries(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        let qubits = qubits_for_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        let rho = Self { data, dim, qubits };
        if rho.hermiticity_error() > NORM_TOL {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(rho)
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.dim();
        let a = psi.amplitudes();
        let mut data = Vec::with_capacity(dim * dim);
        for ai in a {
            for aj in a {
                data.push(ai * aj.conj());
            }
        }
        Self {
            data,
            dim,
            qubits: psi.qubits(),
        }
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        Ok(Self::from_pure(&StateVector::basis(qubits, index)?))
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self { data, dim, qubits }
    }

    /// `(1 - w)·a + w·b`.
    pub fn mix(a: &DensityMatrix, b: &DensityMatrix, w: f64) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch {
                expected: a.dim,
                actual: b.dim,
            });
        }
        let data = a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| x * (1.0 - w) + y * w)
            .collect();
        Ok(Self {
            data,
            dim: a.dim,
            qubits: a.qubits,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Populations `⟨j|ρ|j⟩`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// `ρ v`.
    pub fn apply_to(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(r, x)| r * x).sum())
            .collect()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let rv = self.apply_to(psi);
        psi.iter()
            .zip(&rv)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_nalgebra();
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalised_vectors() {
        assert!(StateVector::new(vec![Complex64::new(1.0, 0.0); 4]).is_err());
        assert!(StateVector::new(vec![Complex64::new(1.0, 0.0); 3]).is_err());
        let s = StateVector::normalized(vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.qubits(), 2);
    }

    #[test]
    fn text_round_trip() {
        let s = StateVector::normalized(vec![
            Complex64::new(0.3, -0.1),
            Complex64::new(0.0, 0.7),
            Complex64::new(-0.2, 0.0),
            Complex64::new(0.5, 0.5),
        ])
        .unwrap();
        let back = StateVector::from_text(&s.to_text()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn density_invariants() {
        let rho = DensityMatrix::basis(2, 3).unwrap();
        assert_eq!(rho.diagonal(), vec![0.0, 0.0, 0.0, 1.0]);
        let mm = DensityMatrix::maximally_mixed(2);
        assert!((mm.min_eigenvalue() - 0.25).abs() < 1e-12);
        let mix = DensityMatrix::mix(&rho, &mm, 0.5).unwrap();
        assert!((mix.trace().re - 1.0).abs() < 1e-15);
        assert!(DensityMatrix::from_entries(4, mix.entries().to_vec()).is_ok());
        let mut bad = mix.entries().to_vec();
        bad[1] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::from_entries(4, bad).is_err());
    }
}
