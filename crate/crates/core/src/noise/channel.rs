use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::DensityMatrix;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const IDENTITY: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
pub const PAULI_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
pub const PAULI_Y: Mat2 = [[ZERO, Complex64::new(0.0, -1.0)], [Complex64::new(0.0, 1.0), ZERO]];
pub const PAULI_Z: Mat2 = [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    BitFlip,
    PhaseFlip,
    BitPhaseFlip,
    Depolarizing,
    AmplitudeDamping,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 5] = [
        ChannelKind::BitFlip,
        ChannelKind::PhaseFlip,
        ChannelKind::BitPhaseFlip,
        ChannelKind::Depolarizing,
        ChannelKind::AmplitudeDamping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::BitFlip => "bit_flip",
            ChannelKind::PhaseFlip => "phase_flip",
            ChannelKind::BitPhaseFlip => "bit_phase_flip",
            ChannelKind::Depolarizing => "depolarizing",
            ChannelKind::AmplitudeDamping => "amplitude_damping",
        }
    }

    pub fn is_pauli(self) -> bool {
        !matches!(self, ChannelKind::AmplitudeDamping)
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown channel kind `{s}`")))
    }
}

/// Single-qubit CPTP map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannel {
    pub kind: ChannelKind,
    /// `p` for the Pauli kinds, `γ` for amplitude damping.
    pub strength: f64,
    pub kraus: Vec<Mat2>,
}

fn scaled(m: &Mat2, s: f64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

fn is_zero(m: &Mat2) -> bool {
    m.iter().flatten().all(|c| *c == ZERO)
}

/// Builds the Kraus set of `kind` at `strength`.
///
/// Depolarizing uses `(1-p)ρ + p·I/2`, i.e. weights `1-3p/4` on `I` and
/// `p/4` on each Pauli; the flip channels apply their Pauli with weight `p/2`.
/// Operators with zero weight are dropped, so strength 0 yields `{I}`.
pub fn make_channel(kind: ChannelKind, strength: f64) -> Result<NoiseChannel> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::StrengthOutOfRange(strength));
    }
    let p = strength;
    let kraus: Vec<Mat2> = match kind {
        ChannelKind::BitFlip => vec![
            scaled(&IDENTITY, (1.0 - p / 2.0).sqrt()),
            scaled(&PAULI_X, (p / 2.0).sqrt()),
        ],
        ChannelKind::PhaseFlip => vec![
            scaled(&IDENTITY, (1.0 - p / 2.0).sqrt()),
            scaled(&PAULI_Z, (p / 2.0).sqrt()),
        ],
        ChannelKind::BitPhaseFlip => vec![
            scaled(&IDENTITY, (1.0 - p / 2.0).sqrt()),
            scaled(&PAULI_Y, (p / 2.0).sqrt()),
        ],
        ChannelKind::Depolarizing => vec![
            scaled(&IDENTITY, (1.0 - 3.0 * p / 4.0).sqrt()),
            scaled(&PAULI_X, (p / 4.0).sqrt()),
            scaled(&PAULI_Y, (p / 4.0).sqrt()),
            scaled(&PAULI_Z, (p / 4.0).sqrt()),
        ],
        ChannelKind::AmplitudeDamping => vec![
            [[ONE, ZERO], [ZERO, Complex64::new((1.0 - p).sqrt(), 0.0)]],
            [[ZERO, Complex64::new(p.sqrt(), 0.0)], [ZERO, ZERO]],
        ],
    };
    Ok(NoiseChannel {
        kind,
        strength,
        kraus: kraus.into_iter().filter(|k| !is_zero(k)).collect(),
    })
}

impl NoiseChannel {
    pub fn identity() -> Self {
        NoiseChannel {
            kind: ChannelKind::Depolarizing,
            strength: 0.0,
            kraus: vec![IDENTITY],
        }
    }

    /// `Σ K†K`, which equals `I` for a trace-preserving channel.
    pub fn completeness(&self) -> Mat2 {
        let mut acc = [[ZERO; 2]; 2];
        for k in &self.kraus {
            for (i, row) in acc.iter_mut().enumerate() {
                for (j, out) in row.iter_mut().enumerate() {
                    *out += (0..2).map(|m| k[m][i].conj() * k[m][j]).sum::<Complex64>();
                }
            }
        }
        acc
    }

    /// 4×4 superoperator acting on a row-major vectorised 2×2 block:
    /// `S[2a+b][2c+d] = Σ_K K[a][c]·conj(K[b][d])`.
    pub fn superoperator(&self) -> [[Complex64; 4]; 4] {
        let mut s = [[ZERO; 4]; 4];
        for k in &self.kraus {
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            s[2 * a + b][2 * c + d] += k[a][c] * k[b][d].conj();
                        }
                    }
                }
            }
        }
        s
    }

    /// Single-qubit population map `T` with `P' = T P`.
    ///
    /// Obtained by sending `|0⟩⟨0|` and `|1⟩⟨1|` through the channel and reading
    /// off the output diagonals as the columns of `T`.
    pub fn diagonal_action(&self) -> [[f64; 2]; 2] {
        let mut t = [[0.0; 2]; 2];
        for c in 0..2 {
            let rho = DensityMatrix::basis(1, c).expect("single-qubit basis state");
            let out = apply_channel(&rho, self, 0).expect("qubit 0 exists");
            for (a, row) in t.iter_mut().enumerate() {
                row[c] = out.get(a, a).re;
            }
        }
        t
    }
}

/// Embeds `channel` on `qubit` and applies it: `ρ' = Σ (I⊗K⊗I) ρ (I⊗K⊗I)†`.
pub fn apply_channel(rho: &DensityMatrix, channel: &NoiseChannel, qubit: usize) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    apply_superoperator_in_place(&mut out, &channel.superoperator(), qubit)?;
    Ok(out)
}

pub(crate) fn apply_superoperator_in_place(
    rho: &mut DensityMatrix,
    sup: &[[Complex64; 4]; 4],
    qubit: usize,
) -> Result<()> {
    let qubits = rho.qubits();
    if qubit >= qubits {
        return Err(Error::QubitOutOfRange { qubit, qubits });
    }
    let dim = rho.dim();
    let s = 1usize << qubit;
    let data = rho.entries_mut();
    let low = (0..dim).filter(|i| i & s == 0);
    for i0 in low {
        let i1 = i0 | s;
        let (r0, r1) = (i0 * dim, i1 * dim);
        let mut j0 = 0;
        while j0 < dim {
            if j0 & s != 0 {
                // jump over the block of indices with the bit set
                j0 += s;
                continue;
            }
            let j1 = j0 | s;
            let b = [data[r0 + j0], data[r0 + j1], data[r1 + j0], data[r1 + j1]];
            if b.iter().any(|x| *x != ZERO) {
                let mut out = [ZERO; 4];
                for (o, row) in out.iter_mut().zip(sup) {
                    *o = row[0] * b[0] + row[1] * b[1] + row[2] * b[2] + row[3] * b[3];
                }
                data[r0 + j0] = out[0];
                data[r0 + j1] = out[1];
                data[r1 + j0] = out[2];
                data[r1 + j1] = out[3];
            }
            j0 += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::StateVector;
    use proptest::prelude::*;

    fn random_density(qubits: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dim = 1 << qubits;
        let mut acc = DensityMatrix::maximally_mixed(qubits);
        for w in [0.5, 0.3] {
            let amps = (0..dim)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let pure = DensityMatrix::from_pure(&StateVector::normalized(amps).unwrap());
            acc = DensityMatrix::mix(&acc, &pure, w).unwrap();
        }
        acc
    }

    fn mat_close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn zero_strength_is_identity() {
        for kind in ChannelKind::ALL {
            let ch = make_channel(kind, 0.0).unwrap();
            assert_eq!(ch.kraus.len(), 1, "{kind}");
            assert!(mat_close(&ch.kraus[0], &IDENTITY, 0.0));
        }
    }

    #[test]
    fn strength_is_checked() {
        assert!(matches!(
            make_channel(ChannelKind::BitFlip, 1.5),
            Err(Error::StrengthOutOfRange(_))
        ));
        assert!(make_channel(ChannelKind::AmplitudeDamping, -0.1).is_err());
        assert!(make_channel(ChannelKind::Depolarizing, f64::NAN).is_err());
    }

    #[test]
    fn completeness_holds() {
        for kind in ChannelKind::ALL {
            for p in [0.0, 1e-3, 0.37, 1.0] {
                let ch = make_channel(kind, p).unwrap();
                assert!(mat_close(&ch.completeness(), &IDENTITY, 1e-12), "{kind} {p}");
            }
        }
    }

    #[test]
    fn depolarizing_is_pauli_twirl() {
        let p = 0.23;
        let ch = make_channel(ChannelKind::Depolarizing, p).unwrap();
        let rho = random_density(1, 3);
        let out = apply_channel(&rho, &ch, 0).unwrap();
        let mm = DensityMatrix::maximally_mixed(1);
        let expected = DensityMatrix::mix(&rho, &mm, p).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-14);

        // (ρ + XρX + YρY + ZρZ)/4 = I/2
        let mut twirl = [[ZERO; 2]; 2];
        for pauli in [IDENTITY, PAULI_X, PAULI_Y, PAULI_Z] {
            for i in 0..2 {
                for j in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            twirl[i][j] += pauli[i][a] * rho.get(a, b) * pauli[j][b].conj() / 4.0;
                        }
                    }
                }
            }
        }
        assert!(mat_close(&twirl, &scaled(&IDENTITY, 0.5), 1e-14));
    }

    #[test]
    fn bit_flip_on_ground_state() {
        let ch = make_channel(ChannelKind::BitFlip, 0.1).unwrap();
        let out = apply_channel(&DensityMatrix::basis(1, 0).unwrap(), &ch, 0).unwrap();
        assert!((out.get(0, 0).re - 0.95).abs() < 1e-15);
        assert!((out.get(1, 1).re - 0.05).abs() < 1e-15);
    }

    #[test]
    fn embedding_targets_the_right_qubit() {
        let p = 0.08;
        let ch = make_channel(ChannelKind::Depolarizing, p).unwrap();
        let out = apply_channel(&DensityMatrix::basis(3, 0).unwrap(), &ch, 0).unwrap();
        let diag = out.diagonal();
        assert!((diag[0] - (1.0 - p / 2.0)).abs() < 1e-15);
        assert!((diag[1] - p / 2.0).abs() < 1e-15);
        assert!(diag[2..].iter().all(|&d| d == 0.0));
        assert!(matches!(
            apply_channel(&out, &ch, 3),
            Err(Error::QubitOutOfRange { qubit: 3, qubits: 3 })
        ));
    }

    #[test]
    fn diagonal_actions() {
        let p = 0.3;
        let m1 = [[1.0 - p / 2.0, p / 2.0], [p / 2.0, 1.0 - p / 2.0]];
        for kind in [ChannelKind::BitFlip, ChannelKind::BitPhaseFlip, ChannelKind::Depolarizing] {
            let t = make_channel(kind, p).unwrap().diagonal_action();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((t[i][j] - m1[i][j]).abs() < 1e-12, "{kind}");
                }
            }
        }
        let t = make_channel(ChannelKind::PhaseFlip, p).unwrap().diagonal_action();
        assert_eq!(t, [[1.0, 0.0], [0.0, 1.0]]);
        let g = 0.2;
        let t = make_channel(ChannelKind::AmplitudeDamping, g).unwrap().diagonal_action();
        let expected = [[1.0, g], [0.0, 1.0 - g]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((t[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn amplitude_damping_relaxes_to_ground() {
        let ch = make_channel(ChannelKind::AmplitudeDamping, 0.1).unwrap();
        let ground = DensityMatrix::basis(1, 0).unwrap();
        let mut rho = random_density(1, 11);
        let mut last = rho.max_abs_diff(&ground);
        for _ in 0..300 {
            rho = apply_channel(&rho, &ch, 0).unwrap();
            let d = rho.max_abs_diff(&ground);
            assert!(d <= last + 1e-15);
            last = d;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn kind_names_parse() {
        for kind in ChannelKind::ALL {
            assert_eq!(kind.name().parse::<ChannelKind>().unwrap(), kind);
        }
        assert_eq!("Bit-Flip".parse::<ChannelKind>().unwrap(), ChannelKind::BitFlip);
        assert!("bogus".parse::<ChannelKind>().is_err());
    }

    fn any_kind() -> impl Strategy<Value = ChannelKind> {
        prop::sample::select(ChannelKind::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn trace_and_positivity_preserved(kind in any_kind(), p in 0.0f64..=1.0,
                                          seed in 0u64..10_000, qubit in 0usize..3) {
            let ch = make_channel(kind, p).unwrap();
            let rho = random_density(3, seed);
            let out = apply_channel(&rho, &ch, qubit).unwrap();
            prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
            prop_assert!(out.trace().im.abs() < 1e-12);
            prop_assert!(out.hermiticity_error() < 1e-12);
            prop_assert!(out.min_eigenvalue() > -1e-10);
        }

        #[test]
        fn distinct_qubits_commute(k1 in any_kind(), k2 in any_kind(), p1 in 0.0f64..=1.0,
                                   p2 in 0.0f64..=1.0, seed in 0u64..10_000) {
            let a = make_channel(k1, p1).unwrap();
            let b = make_channel(k2, p2).unwrap();
            let rho = random_density(3, seed);
            let ab = apply_channel(&apply_channel(&rho, &a, 0).unwrap(), &b, 2).unwrap();
            let ba = apply_channel(&apply_channel(&rho, &b, 2).unwrap(), &a, 0).unwrap();
            prop_assert!(ab.max_abs_diff(&ba) < 1e-12);
        }

        #[test]
        fn phase_flip_keeps_diagonal(p in 0.0f64..=1.0, seed in 0u64..10_000, qubit in 0usize..3) {
            let ch = make_channel(ChannelKind::PhaseFlip, p).unwrap();
            let rho = random_density(3, seed);
            let out = apply_channel(&rho, &ch, qubit).unwrap();
            for (a, b) in out.diagonal().iter().zip(rho.diagonal()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
