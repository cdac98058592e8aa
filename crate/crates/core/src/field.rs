//! Periodic 1D scalar fields, their spectra, exact transport and initial conditions.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{signed_wavenumber, SpectralOps};

/// Domain, speed and discretisation of the convection problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemSpec {
    /// Domain length `L`.
    pub length: f64,
    /// Convection speed `c`.
    pub speed: f64,
    /// Grid points `N`, a power of two.
    pub points: usize,
    /// Time step `Δt` of one evolution layer.
    pub dt: f64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            length: 2.0 * PI,
            speed: 1.0,
            points: 256,
            dt: 0.02,
        }
    }
}

impl ProblemSpec {
    pub fn new(length: f64, speed: f64, points: usize, dt: f64) -> Result<Self> {
        let spec = Self {
            length,
            speed,
            points,
            dt,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Default domain and speed on a `2^qubits` grid.
    pub fn with_qubits(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits >= usize::BITS as usize {
            return Err(Error::InvalidSpec(format!("qubit count {qubits} out of range")));
        }
        Self::new(2.0 * PI, 1.0, 1 << qubits, 0.02)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || !self.points.is_power_of_two() {
            return Err(Error::InvalidSpec(format!(
                "grid size N = {} must be a power of two and at least 2",
                self.points
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidSpec(format!("time step dt = {} must be positive", self.dt)));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "domain length L = {} must be positive",
                self.length
            )));
        }
        if !self.speed.is_finite() {
            return Err(Error::InvalidSpec("convection speed must be finite".into()));
        }
        Ok(())
    }

    /// Qubit count `n = log2 N`.
    pub fn qubits(&self) -> usize {
        self.points.trailing_zeros() as usize
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    /// `2π/L`, converting integer wavenumbers to angular ones.
    pub fn wavenumber_scale(&self) -> f64 {
        2.0 * PI / self.length
    }
}

/// Grid coordinates `x_j = jL/N`.
pub fn make_grid(spec: &ProblemSpec) -> Vec<f64> {
    let dx = spec.dx();
    (0..spec.points).map(|j| j as f64 * dx).collect()
}

/// `(cos x + sin 2x + 2 cos 2x + 3 cos 3x) / 10`, the reference initial profile.
pub fn eval_reference_profile(x: f64) -> f64 {
    (x.cos() + (2.0 * x).sin() + 2.0 * (2.0 * x).cos() + 3.0 * (3.0 * x).cos()) / 10.0
}

/// Real field sampled on the periodic grid of `spec` at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
    pub time: f64,
    pub spec: ProblemSpec,
}

impl GridField {
    pub fn new(values: Vec<f64>, time: f64, spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.points {
            return Err(Error::DimensionMismatch {
                expected: spec.points,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("field contains non-finite samples".into()));
        }
        Ok(Self { values, time, spec })
    }

    pub fn from_fn(spec: ProblemSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = make_grid(&spec).into_iter().map(f).collect();
        Self::new(values, 0.0, spec)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn spectrum(&self) -> FourierSpectrum {
        FourierSpectrum::from_field(self)
    }

    /// Writes `x,u` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,u")?;
        for (x, u) in make_grid(&self.spec).iter().zip(&self.values) {
            writeln!(w, "{x:.17e},{u:.17e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, spec: ProblemSpec, time: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.points);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let u = line
                .split(',')
                .nth(1)
                .ok_or_else(|| Error::Parse(format!("line {}: expected `x,u`", i + 1)))?;
            values.push(
                u.trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?,
            );
        }
        Self::new(values, time, spec)
    }

    pub fn metadata(&self, seed: Option<u64>) -> FieldMetadata {
        FieldMetadata {
            spec: self.spec,
            seed,
            time: self.time,
        }
    }
}

/// Key-value sidecar stored next to a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub spec: ProblemSpec,
    pub seed: Option<u64>,
    pub time: f64,
}

impl FieldMetadata {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata is always serialisable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Unitary Fourier coefficients of a grid field, in storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    pub coefficients: Vec<Complex64>,
}

impl FourierSpectrum {
    pub fn from_field(field: &GridField) -> Self {
        let ops = SpectralOps::new(field.spec.points);
        Self {
            coefficients: ops.analyze_real(&field.values),
        }
    }

    /// Coefficient of signed wavenumber `k ∈ [-N/2, N/2)`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        let n = self.coefficients.len() as i64;
        self.coefficients[k.rem_euclid(n) as usize]
    }

    pub fn wavenumbers(&self) -> Vec<i64> {
        let n = self.coefficients.len();
        (0..n).map(|j| signed_wavenumber(j, n)).collect()
    }

    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Real part of the synthesised field.
    pub fn to_field(&self, spec: ProblemSpec, time: f64) -> Result<GridField> {
        let ops = SpectralOps::new(spec.points);
        GridField::new(ops.synthesize_real(&self.coefficients), time, spec)
    }
}

/// Exact transport `u(x, t0 + t) = f0(x - ct)`, applied spectrally.
///
/// Each coefficient is multiplied by `e^{i κ_k c t}`; the Nyquist mode carries
/// no phase information on the grid and is projected onto its real part.
pub fn exact_solution(f0: &GridField, t: f64) -> GridField {
    let spec = f0.spec;
    let ops = SpectralOps::new(spec.points);
    let mut coeffs = ops.analyze_real(&f0.values);
    let scale = spec.wavenumber_scale() * spec.speed * t;
    for (j, c) in coeffs.iter_mut().enumerate() {
        let k = signed_wavenumber(j, spec.points) as f64;
        *c *= Complex64::from_polar(1.0, k * scale);
    }
    GridField {
        values: ops.synthesize_real(&coeffs),
        time: f0.time + t,
        spec,
    }
}

/// The eleven sphere draws behind a random initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpectrum {
    /// Uniform draw on the 8-sphere of radius `base_radius`.
    pub base: [f64; 8],
    /// Uniform draw on the 3-sphere of radius `extra_radius`.
    pub extra: [f64; 3],
    /// `base` with `extra` added to its first three entries, read as
    /// `(a_1, b_1, a_2, b_2, a_3, b_3, a_4, b_4)`.
    pub coefficients: [f64; 8],
}

impl RandomSpectrum {
    pub fn draw(seed: u64, base_radius: f64, extra_radius: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: [f64; 8] = sphere_point(&mut rng, base_radius);
        let extra: [f64; 3] = sphere_point(&mut rng, extra_radius);
        let mut coefficients = base;
        for (c, e) in coefficients.iter_mut().zip(extra) {
            *c += e;
        }
        Self {
            base,
            extra,
            coefficients,
        }
    }

    /// Highest populated wavenumber.
    pub const MAX_MODE: usize = 4;

    /// `Σ_k a_k cos kκx + b_k sin kκx` for `k = 1..=4`.
    pub fn eval(&self, x: f64, wavenumber_scale: f64) -> f64 {
        self.coefficients
            .chunks(2)
            .enumerate()
            .map(|(i, ab)| {
                let arg = (i + 1) as f64 * wavenumber_scale * x;
                ab[0] * arg.cos() + ab[1] * arg.sin()
            })
            .sum()
    }
}

fn sphere_point<const D: usize>(rng: &mut ChaCha8Rng, radius: f64) -> [f64; D] {
    loop {
        let mut v = [0.0; D];
        for x in v.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.map(|x| radius * x / norm);
        }
    }
}

/// Random low-mode initial condition, fully determined by `seed`.
pub fn random_initial_condition(seed: u64, spec: &ProblemSpec) -> Result<GridField> {
    InitialCondition::RandomSphere {
        seed,
        base_radius: 0.3,
        extra_radius: 0.3,
    }
    .build(spec)
}

/// Named profiles available from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedProfile {
    /// `(cos x + sin 2x + 2 cos 2x + 3 cos 3x) / 10`
    Reference,
    /// `sin(κx)` with `κ = 2π/L`.
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Named {
        profile: NamedProfile,
    },
    RandomSphere {
        seed: u64,
        base_radius: f64,
        extra_radius: f64,
    },
}

impl InitialCondition {
    pub fn random(seed: u64) -> Self {
        Self::RandomSphere {
            seed,
            base_radius: 0.3,
            extra_radius: 0.3,
        }
    }

    pub fn build(&self, spec: &ProblemSpec) -> Result<GridField> {
        let scale = spec.wavenumber_scale();
        match self {
            InitialCondition::Named { profile } => match profile {
                // The formula is written for L = 2π; rescale x accordingly.
                NamedProfile::Reference => {
                    GridField::from_fn(*spec, |x| eval_reference_profile(scale * x))
                }
                NamedProfile::Sine => GridField::from_fn(*spec, |x| (scale * x).sin()),
            },
            InitialCondition::RandomSphere {
                seed,
                base_radius,
                extra_radius,
            } => {
                let draw = RandomSpectrum::draw(*seed, *base_radius, *extra_radius);
                GridField::from_fn(*spec, |x| draw.eval(x, scale))
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InitialCondition::RandomSphere { seed, .. } => Some(*seed),
            InitialCondition::Named { .. } => None,
        }
    }
}
