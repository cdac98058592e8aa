use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::ProbabilityVector;
use crate::error::{Error, Result};

/// Finite-shot measurement settings for empirical matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSampler {
    pub shots: u64,
    pub seed: u64,
    #[serde(default)]
    pub readout: Option<ReadoutModel>,
    /// Undo readout error on the sampled counts.
    #[serde(default)]
    pub mitigate: bool,
}

impl ShotSampler {
    pub fn new(shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            readout: None,
            mitigate: false,
        }
    }

    pub fn with_readout(mut self, model: ReadoutModel, mitigate: bool) -> Self {
        self.readout = Some(model);
        self.mitigate = mitigate;
        self
    }

    /// Draws `shots` outcomes from `probs` (after readout error) and returns
    /// frequencies, mitigated if requested.
    pub(crate) fn measure<R: Rng>(&self, probs: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let clean = ProbabilityVector::new(clip_normalize(probs))?;
        let observed = match &self.readout {
            Some(m) => m.apply(&clean)?,
            None => clean,
        };
        let counts = sample_counts_with_rng(&observed, self.shots, rng)?;
        match (&self.readout, self.mitigate) {
            (Some(m), true) => Ok(mitigate_readout(&counts, m)?.entries().to_vec()),
            _ => Ok(ProbabilityVector::from_counts(&counts)?.entries().to_vec()),
        }
    }
}

fn clip_normalize(p: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    clipped.iter().map(|v| v / sum).collect()
}

/// Multinomial counts for `shots` draws from `p`.
pub fn sample_counts(p: &ProbabilityVector, shots: u64, seed: u64) -> Result<Vec<u64>> {
    sample_counts_with_rng(p, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Multinomial sampling as a chain of conditional binomials.
pub fn sample_counts_with_rng<R: Rng>(
    p: &ProbabilityVector,
    shots: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidSpec("shot count must be positive".into()));
    }
    let mut counts = vec![0u64; p.len()];
    let mut left = shots;
    let mut mass = 1.0f64;
    let last = p.len() - 1;
    for (i, &pi) in p.entries().iter().enumerate() {
        if left == 0 {
            break;
        }
        if i == last {
            counts[i] = left;
            break;
        }
        let cond = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 1.0 };
        let k = Binomial::new(left, cond)
            .map_err(|e| Error::InvalidState(format!("binomial: {e}")))?
            .sample(rng);
        counts[i] = k;
        left -= k;
        mass -= pi;
    }
    Ok(counts)
}

/// Independent per-qubit readout errors.
///
/// `confusion[q] = [[1-e01, e10], [e01, 1-e10]]` where `e01` is the chance of
/// reading 1 when the qubit is 0 and columns index the true value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub confusion: Vec<[[f64; 2]; 2]>,
}

impl ReadoutModel {
    pub fn uniform(qubits: usize, e01: f64, e10: f64) -> Result<Self> {
        Self::new(vec![(e01, e10); qubits])
    }

    pub fn new(errors: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &errors {
            for e in [a, b] {
                if !(0.0..=1.0).contains(&e) {
                    return Err(Error::StrengthOutOfRange(e));
                }
            }
        }
        Ok(Self {
            confusion: errors
                .into_iter()
                .map(|(e01, e10)| [[1.0 - e01, e10], [e01, 1.0 - e10]])
                .collect(),
        })
    }

    pub fn qubits(&self) -> usize {
        self.confusion.len()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != 1 << self.qubits() {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.qubits(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Distribution of read-out bit strings for true distribution `p`.
    pub fn apply(&self, p: &ProbabilityVector) -> Result<ProbabilityVector> {
        self.check(p.len())?;
        let mut v = p.entries().to_vec();
        for (q, c) in self.confusion.iter().enumerate() {
            apply_on_qubit(&mut v, q, c);
        }
        ProbabilityVector::new(clip_normalize(&v))
    }

    /// Full `2^n × 2^n` confusion matrix, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let dim = 1usize << self.qubits();
        let mut out = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut col = vec![0.0; dim];
            col[j] = 1.0;
            for (q, c) in self.confusion.iter().enumerate() {
                apply_on_qubit(&mut col, q, c);
            }
            for i in 0..dim {
                out[i * dim + j] = col[i];
            }
        }
        out
    }
}

fn apply_on_qubit(v: &mut [f64], q: usize, m: &[[f64; 2]; 2]) {
    let bit = 1usize << q;
    for i in 0..v.len() {
        if i & bit == 0 {
            let (a, b) = (v[i], v[i | bit]);
            v[i] = m[0][0] * a + m[0][1] * b;
            v[i | bit] = m[1][0] * a + m[1][1] * b;
        }
    }
}

/// Inverts the readout model on observed counts, then clips negative
/// estimates to zero and renormalises.
pub fn mitigate_readout(counts: &[u64], model: &ReadoutModel) -> Result<ProbabilityVector> {
    model.check(counts.len())?;
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidState("no shots recorded".into()));
    }
    let mut v: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    for (q, c) in model.confusion.iter().enumerate() {
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        if det.abs() < 1e-12 {
            return Err(Error::SingularConfusion(q));
        }
        let inv = [[c[1][1] / det, -c[0][1] / det], [-c[1][0] / det, c[0][0] / det]];
        apply_on_qubit(&mut v, q, &inv);
    }
    ProbabilityVector::new(clip_normalize(&v))
}
