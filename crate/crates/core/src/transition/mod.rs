//! Transition matrices between computational-basis populations.
//!
//! For independent single-qubit Pauli noise of strength `p` per layer, `l`
//! layers map populations by `M_1(p(l))^{⊗n}` with `p(l) = 1 - (1-p)^l`, so
//! every entry depends only on the Hamming distance between row and column.

mod fit;
mod shots;

pub use fit::fit_p;
pub use shots::{mitigate_readout, sample_counts, sample_counts_with_rng, ReadoutModel, ShotSampler};

use std::fmt::Write as _;
use std::io::BufRead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ProblemSpec;
use crate::noise::{ChannelKind, NoisyStepConfig, NoisyStepper};
use crate::quantum::{DensityMatrix, EvolutionLayer};

/// Number of differing bits between `i` and `j`.
#[inline]
pub fn hamming(i: usize, j: usize) -> u32 {
    (i ^ j).count_ones()
}

/// Populations of the `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || !entries.len().is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "{} populations is not a power of two",
                entries.len()
            )));
        }
        if entries.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidState("populations must be non-negative".into()));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("populations sum to {sum}")));
        }
        Ok(Self(entries))
    }

    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut v = vec![0.0; 1 << qubits];
        v[index] = 1.0;
        Self(v)
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidState("no shots recorded".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn qubits(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }
}

/// Where a transition matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provenance", rename_all = "snake_case")]
pub enum Provenance {
    Analytic {
        p: f64,
        layers: usize,
    },
    Empirical {
        channel: ChannelKind,
        strength: f64,
        layers: usize,
        shots: Option<u64>,
        seed: Option<u64>,
    },
    /// Product or other algebraic combination of matrices.
    Derived,
}

/// Column-stochastic `2^n × 2^n` matrix, row-major; column `j` is the output
/// distribution for input basis state `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    qubits: usize,
    entries: Vec<f64>,
    pub provenance: Provenance,
}

impl TransitionMatrix {
    pub fn from_entries(qubits: usize, entries: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let dim = 1usize << qubits;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(Self {
            qubits,
            entries,
            provenance,
        })
    }

    fn from_columns(qubits: usize, columns: &[Vec<f64>], provenance: Provenance) -> Self {
        let dim = 1usize << qubits;
        let mut entries = vec![0.0; dim * dim];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                entries[i * dim + j] = *v;
            }
        }
        Self {
            qubits,
            entries,
            provenance,
        }
    }

    pub fn identity(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self {
            qubits,
            entries,
            provenance: Provenance::Derived,
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, col)).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.column(j).iter().sum()).collect()
    }

    /// Largest `|Σ_i M[i,j] - 1|`.
    pub fn stochasticity_error(&self) -> f64 {
        self.column_sums()
            .iter()
            .fold(0.0, |m, s| m.max((s - 1.0).abs()))
    }

    /// `max |M - Mᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in i + 1..dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &TransitionMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &TransitionMatrix) -> Result<TransitionMatrix> {
        if self.qubits != rhs.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rhs.dim(),
            });
        }
        let dim = self.dim();
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    entries[i * dim + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(TransitionMatrix {
            qubits: self.qubits,
            entries,
            provenance: Provenance::Derived,
        })
    }

    /// Kronecker product `self ⊗ rhs`; `rhs` occupies the low-order bits.
    pub fn tensor(&self, rhs: &TransitionMatrix) -> TransitionMatrix {
        let (da, db) = (self.dim(), rhs.dim());
        let dim = da * db;
        let mut entries = vec![0.0; dim * dim];
        for ia in 0..da {
            for ja in 0..da {
                let a = self.get(ia, ja);
                for ib in 0..db {
                    for jb in 0..db {
                        entries[(ia * db + ib) * dim + ja * db + jb] = a * rhs.get(ib, jb);
                    }
                }
            }
        }
        TransitionMatrix {
            qubits: self.qubits + rhs.qubits,
            entries,
            provenance: Provenance::Derived,
        }
    }

    pub fn apply(&self, p: &ProbabilityVector) -> Result<ProbabilityVector> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: p.len(),
            });
        }
        let out = self
            .entries
            .chunks_exact(self.dim())
            .map(|row| row.iter().zip(p.entries()).map(|(m, x)| m * x).sum::<f64>().max(0.0))
            .collect();
        ProbabilityVector::new(out)
    }

    fn header(&self) -> String {
        let opt = |v: Option<u64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        match &self.provenance {
            Provenance::Analytic { p, layers } => format!(
                "# n={},l={},provenance=analytic,p={:e},shots=none,seed=none",
                self.qubits, layers, p
            ),
            Provenance::Empirical {
                channel,
                strength,
                layers,
                shots,
                seed,
            } => {
                let param = if *channel == ChannelKind::AmplitudeDamping { "gamma" } else { "p" };
                format!(
                    "# n={},l={},provenance=empirical,channel={},{}={:e},shots={},seed={}",
                    self.qubits,
                    layers,
                    channel,
                    param,
                    strength,
                    opt(*shots),
                    opt(*seed)
                )
            }
            Provenance::Derived => format!(
                "# n={},l=none,provenance=derived,p=none,shots=none,seed=none",
                self.qubits
            ),
        }
    }

    /// Dense row-major CSV preceded by a `# key=value,...` metadata line.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for row in self.entries.chunks_exact(self.dim()) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn from_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut entries = Vec::new();
        let mut rows = 0usize;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.trim().split(',') {
                    if let Some((k, v)) = kv.split_once('=') {
                        meta.insert(k.trim().to_string(), v.trim().to_string());
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            for v in line.split(',') {
                entries.push(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {rows}: {e}")))?,
                );
            }
            rows += 1;
        }
        if rows == 0 || !rows.is_power_of_two() || entries.len() != rows * rows {
            return Err(Error::Parse(format!("{rows} rows do not form a 2^n square matrix")));
        }
        let get = |k: &str| meta.get(k).filter(|v| v.as_str() != "none");
        let num = |k: &str| -> Result<Option<f64>> {
            get(k)
                .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("{k}: {e}"))))
                .transpose()
        };
        let int = |k: &str| -> Result<Option<u64>> {
            get(k)
                .map(|v| v.parse::<u64>().map_err(|e| Error::Parse(format!("{k}: {e}"))))
                .transpose()
        };
        let layers = int("l")?.unwrap_or(0) as usize;
        let provenance = match get("provenance").map(String::as_str) {
            Some("analytic") => Provenance::Analytic {
                p: num("p")?.unwrap_or(0.0),
                layers,
            },
            Some("empirical") => Provenance::Empirical {
                channel: get("channel")
                    .ok_or_else(|| Error::Parse("missing channel".into()))?
                    .parse()?,
                strength: num("p")?.or(num("gamma")?).unwrap_or(0.0),
                layers,
                shots: int("shots")?,
                seed: int("seed")?,
            },
            _ => Provenance::Derived,
        };
        Self::from_entries(rows.trailing_zeros() as usize, entries, provenance)
    }
}

/// Single-qubit transition matrix `[[1-p/2, p/2], [p/2, 1-p/2]]`.
pub fn m1(p: f64) -> Result<TransitionMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::StrengthOutOfRange(p));
    }
    Ok(TransitionMatrix {
        qubits: 1,
        entries: vec![1.0 - p / 2.0, p / 2.0, p / 2.0, 1.0 - p / 2.0],
        provenance: Provenance::Analytic { p, layers: 1 },
    })
}

/// Accumulated flip probability `1 - (1-p)^l` after `l` layers.
pub fn effective_p(p: f64, layers: usize) -> f64 {
    if layers == 0 {
        return 0.0;
    }
    // -expm1(l·ln(1-p)) keeps full relative precision for small p
    -((layers as f64) * (-p).ln_1p()).exp_m1()
}

/// Closed-form entry for Hamming distance `d` on `n` qubits at accumulated flip
/// probability `q`: `(q/2)^d ((2-q)/2)^{n-d}`.
pub fn closed_form_entry(qubits: usize, q: f64, d: u32) -> f64 {
    (q / 2.0).powi(d as i32) * ((2.0 - q) / 2.0).powi(qubits as i32 - d as i32)
}

/// `M_n^l` for per-layer strength `p`.
pub fn analytic_matrix(qubits: usize, p: f64, layers: usize) -> Result<TransitionMatrix> {
    if qubits == 0 {
        return Err(Error::InvalidSpec("at least one qubit is required".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::StrengthOutOfRange(p));
    }
    let q = effective_p(p, layers);
    let by_distance: Vec<f64> = (0..=qubits as u32)
        .map(|d| closed_form_entry(qubits, q, d))
        .collect();
    let dim = 1usize << qubits;
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            entries.push(by_distance[hamming(i, j) as usize]);
        }
    }
    Ok(TransitionMatrix {
        qubits,
        entries,
        provenance: Provenance::Analytic { p, layers },
    })
}

/// Simulated transition matrix: each basis state `|j⟩⟨j|` is run through
/// `layers` noisy layers on a dense density matrix and the output diagonal
/// becomes column `j`.
///
/// Basis preparation is exact. With a sampler, each column is replaced by shot
/// frequencies (optionally through a readout model and its mitigation).
/// Columns are independent and evaluated in parallel; the result does not
/// depend on the worker count.
pub fn empirical_matrix(
    qubits: usize,
    layers: usize,
    cfg: &NoisyStepConfig,
    sampler: Option<&ShotSampler>,
) -> Result<TransitionMatrix> {
    let spec = ProblemSpec::with_qubits(qubits)?;
    let stepper = NoisyStepper::new(&EvolutionLayer::for_spec(&spec), cfg);
    let dim = 1usize << qubits;
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|j| -> Result<Vec<f64>> {
            let mut rho = DensityMatrix::basis(qubits, j)?;
            for _ in 0..layers {
                stepper.step_in_place(&mut rho)?;
            }
            let diag = rho.diagonal();
            match sampler {
                None => Ok(diag),
                Some(s) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                    rng.set_stream(j as u64);
                    s.measure(&diag, &mut rng)
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(TransitionMatrix::from_columns(
        qubits,
        &columns,
        Provenance::Empirical {
            channel: cfg.channel.kind,
            strength: cfg.channel.strength,
            layers,
            shots: sampler.map(|s| s.shots),
            seed: sampler.map(|s| s.seed),
        },
    ))
}

/// Mean transition probability per Hamming distance `d = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HammingProfile {
    pub layers: Option<usize>,
    pub values: Vec<f64>,
}

pub fn group_by_distance(m: &TransitionMatrix) -> HammingProfile {
    let n = m.qubits();
    let mut sums = vec![0.0; n + 1];
    let mut counts = vec![0usize; n + 1];
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let d = hamming(i, j) as usize;
            sums[d] += m.get(i, j);
            counts[d] += 1;
        }
    }
    let layers = match m.provenance {
        Provenance::Analytic { layers, .. } | Provenance::Empirical { layers, .. } => Some(layers),
        Provenance::Derived => None,
    };
    HammingProfile {
        layers,
        values: sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect(),
    }
}

/// Analytic Hamming profiles for a sequence of layer counts.
pub fn hamming_decay_curve(qubits: usize, p: f64, layers: &[usize]) -> Result<Vec<HammingProfile>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::StrengthOutOfRange(p));
    }
    Ok(layers
        .iter()
        .map(|&l| {
            let q = effective_p(p, l);
            HammingProfile {
                layers: Some(l),
                values: (0..=qubits as u32)
                    .map(|d| closed_form_entry(qubits, q, d))
                    .collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseChannel;
    use proptest::prelude::*;

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(6, 6), 0);
        assert_eq!(hamming(5, 3), 2);
        assert_eq!(hamming(0, 7), 3);
    }

    #[test]
    fn m1_examples() {
        assert_eq!(m1(0.0).unwrap().entries(), &[1.0, 0.0, 0.0, 1.0]);
        let m = m1(0.1).unwrap();
        for (a, b) in m.entries().iter().zip([0.95, 0.05, 0.05, 0.95]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(m1(1.0).unwrap().entries().iter().all(|&v| v == 0.5));
        assert!(matches!(m1(1.2), Err(Error::StrengthOutOfRange(_))));
    }

    #[test]
    fn effective_p_examples() {
        assert_eq!(effective_p(0.3, 0), 0.0);
        assert!((effective_p(0.3, 1) - 0.3).abs() < 1e-15);
        // iterated product as an independent oracle
        let mut keep = 1.0;
        for _ in 0..320 {
            keep *= 1.0 - 8.3e-4;
        }
        let q = effective_p(8.3e-4, 320);
        assert!((q - (1.0 - keep)).abs() < 1e-13);
        assert!((q - 0.2334).abs() < 1e-4);
    }

    #[test]
    fn analytic_examples() {
        let m = analytic_matrix(3, 0.01, 0).unwrap();
        assert_eq!(m.max_abs_diff(&TransitionMatrix::identity(3)), 0.0);
        let m = analytic_matrix(1, 8.3e-4, 37).unwrap();
        let expected = m1(effective_p(8.3e-4, 37)).unwrap();
        assert!(m.max_abs_diff(&expected) < 1e-16);
    }

    #[test]
    fn tensor_structure() {
        for n in 1..=5 {
            let p = 2.5e-3;
            let l = 17;
            let single = m1(effective_p(p, l)).unwrap();
            let mut kron = single.clone();
            for _ in 1..n {
                kron = kron.tensor(&single);
            }
            assert!(analytic_matrix(n, p, l).unwrap().max_abs_diff(&kron) < 1e-15);
        }
    }

    #[test]
    fn empirical_zero_noise_is_identity() {
        let cfg = NoisyStepConfig::new(NoiseChannel::identity());
        let m = empirical_matrix(3, 25, &cfg, None).unwrap();
        assert!(m.max_abs_diff(&TransitionMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn empirical_matches_analytic_small() {
        let cfg = NoisyStepConfig::from_kind(ChannelKind::Depolarizing, 0.004).unwrap();
        let m = empirical_matrix(3, 40, &cfg, None).unwrap();
        let a = analytic_matrix(3, 0.004, 40).unwrap();
        assert!(m.max_abs_diff(&a) < 1e-12);
        assert!(m.asymmetry() < 1e-12);
    }

    #[test]
    fn amplitude_damping_breaks_symmetry() {
        let cfg = NoisyStepConfig::from_kind(ChannelKind::AmplitudeDamping, 0.01).unwrap();
        let m = empirical_matrix(2, 50, &cfg, None).unwrap();
        for k in 1..4 {
            assert!(m.get(0, k) > m.get(k, 0));
        }
    }

    #[test]
    fn empirical_with_shots_is_deterministic() {
        let cfg = NoisyStepConfig::from_kind(ChannelKind::Depolarizing, 0.01).unwrap();
        let sampler = ShotSampler::new(600, 99);
        let a = empirical_matrix(2, 30, &cfg, Some(&sampler)).unwrap();
        let b = empirical_matrix(2, 30, &cfg, Some(&sampler)).unwrap();
        assert_eq!(a, b);
        assert!(a.stochasticity_error() < 1e-12);
        for v in a.entries() {
            assert_eq!((v * 600.0).round(), v * 600.0);
        }
    }

    #[test]
    fn profile_examples() {
        let id = group_by_distance(&TransitionMatrix::identity(3));
        assert_eq!(id.values, vec![1.0, 0.0, 0.0, 0.0]);
        let m = analytic_matrix(4, 1e-3, 200).unwrap();
        let q = effective_p(1e-3, 200);
        let prof = group_by_distance(&m);
        assert_eq!(prof.layers, Some(200));
        for (d, v) in prof.values.iter().enumerate() {
            assert!((v - closed_form_entry(4, q, d as u32)).abs() < 1e-16);
        }
        let far = group_by_distance(&analytic_matrix(4, 1e-3, 1_000_000).unwrap());
        assert!(far.values.iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-12));
    }

    #[test]
    fn decay_curves_are_monotone() {
        let ls: Vec<usize> = (0..=400).step_by(20).collect();
        let curves = hamming_decay_curve(3, 8.3e-4, &ls).unwrap();
        assert_eq!(curves[0].values, vec![1.0, 0.0, 0.0, 0.0]);
        for w in curves.windows(2) {
            assert!(w[1].values[0] < w[0].values[0]);
            for d in 1..=3 {
                assert!(w[1].values[d] > w[0].values[d]);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let cfg = NoisyStepConfig::from_kind(ChannelKind::AmplitudeDamping, 0.02).unwrap();
        let m = empirical_matrix(2, 5, &cfg, Some(&ShotSampler::new(1000, 3))).unwrap();
        let text = m.to_csv();
        assert!(text.starts_with("# n=2,l=5,provenance=empirical,channel=amplitude_damping,gamma="));
        let back = TransitionMatrix::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back, m);
        let a = analytic_matrix(3, 8.3e-4, 320).unwrap();
        assert_eq!(TransitionMatrix::from_csv(a.to_csv().as_bytes()).unwrap(), a);
    }

    proptest! {
        #[test]
        fn analytic_structure(n in 1usize..6, p in 0.0f64..=1.0, l in 0usize..500) {
            let m = analytic_matrix(n, p, l).unwrap();
            prop_assert!(m.stochasticity_error() < 1e-9);
            prop_assert!(m.asymmetry() == 0.0);
            prop_assert!(m.entries().iter().all(|&v| (0.0..=1.0).contains(&v)));
            let q = effective_p(p, l);
            if q > 1e-12 && q < 1.0 - 1e-6 {
                let prof = group_by_distance(&m);
                for w in prof.values.windows(2) {
                    prop_assert!(w[1] < w[0]);
                }
            }
        }

        #[test]
        fn semigroup(n in 1usize..5, p in 0.0f64..0.05, l1 in 0usize..200, l2 in 0usize..200) {
            let a = analytic_matrix(n, p, l1).unwrap();
            let b = analytic_matrix(n, p, l2).unwrap();
            let ab = a.compose(&b).unwrap();
            prop_assert!(ab.max_abs_diff(&analytic_matrix(n, p, l1 + l2).unwrap()) < 1e-10);
        }
    }
}
