//! Run configuration.
//!
//! Values are resolved in three layers: built-in defaults, then the TOML file
//! given with `--config`, then command-line flags. Later layers win.

use std::path::{Path, PathBuf};

use qconv_core::discovery::RegressionConfig;
use qconv_core::field::{InitialCondition, NamedProfile, ProblemSpec};
use qconv_core::noise::{make_channel, ChannelKind, NoisyStepConfig};
use qconv_core::quantum::Reconstruction;
use qconv_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A noise channel as written in the config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub strength: f64,
}

impl ChannelSpec {
    pub fn depolarizing(strength: f64) -> Self {
        Self {
            kind: ChannelKind::Depolarizing,
            strength,
        }
    }

    pub fn step_config(&self) -> Result<NoisyStepConfig, CliError> {
        Ok(NoisyStepConfig::new(make_channel(self.kind, self.strength)?))
    }

    /// Short directory-safe label such as `depolarizing_p8.3e-4`.
    pub fn label(&self) -> String {
        let sym = if self.kind == ChannelKind::AmplitudeDamping { "g" } else { "p" };
        format!("{}_{sym}{:e}", self.kind.name(), self.strength)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionMode {
    #[default]
    CoherentProjection,
    SignedDiagonal,
}

impl From<ReconstructionMode> for Reconstruction {
    fn from(m: ReconstructionMode) -> Self {
        match m {
            ReconstructionMode::CoherentProjection => Reconstruction::CoherentProjection,
            ReconstructionMode::SignedDiagonal => Reconstruction::SignedDiagonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub steps: usize,
    pub ideal: bool,
    pub noise: Vec<ChannelSpec>,
    pub initial: InitialCondition,
    pub reconstruction: ReconstructionMode,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            steps: 400,
            ideal: true,
            noise: vec![ChannelSpec::depolarizing(8.3e-4), ChannelSpec::depolarizing(1.6e-3)],
            initial: InitialCondition::Named {
                profile: NamedProfile::Reference,
            },
            reconstruction: ReconstructionMode::default(),
        }
    }
}

/// Per-qubit readout error probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSpec {
    /// Probability of reading 1 when the qubit is 0.
    pub e01: f64,
    /// Probability of reading 0 when the qubit is 1.
    pub e10: f64,
    /// Invert the readout model on the sampled counts.
    #[serde(default = "default_true")]
    pub mitigate: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransitionConfig {
    pub qubits: Vec<usize>,
    pub layers: Vec<usize>,
    pub channel: ChannelSpec,
    /// Shots per basis state; exact populations when absent.
    pub shots: Option<u64>,
    pub readout: Option<ReadoutSpec>,
    /// Layer counts for the Hamming-distance decay curves.
    pub decay_layers: Vec<usize>,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self {
            qubits: vec![1, 3, 5, 7],
            layers: vec![320],
            channel: ChannelSpec::depolarizing(8.3e-4),
            shots: None,
            readout: None,
            decay_layers: (0..=400).step_by(20).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub count: usize,
    pub held_out: usize,
    pub steps: usize,
    pub channel: ChannelSpec,
    pub reconstruction: ReconstructionMode,
    /// Dataset root; relative paths are resolved against the output directory.
    pub dir: PathBuf,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            count: 54,
            held_out: 5,
            steps: 400,
            channel: ChannelSpec::depolarizing(8.3e-4),
            reconstruction: ReconstructionMode::default(),
            dir: PathBuf::from("datasets"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscoveryConfig {
    pub regression: RegressionConfig,
    /// Terms allowed in the restricted fit.
    pub restricted_terms: Vec<String>,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            regression: RegressionConfig::default(),
            restricted_terms: vec!["u".into(), "u^2".into(), "u_xx".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateConfig {
    pub solver: SolverConfig,
    pub tolerance: f64,
    /// Model files; defaults to the models written by `discover`.
    pub models: Vec<PathBuf>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            tolerance: 0.1,
            models: Vec::new(),
        }
    }
}

/// Device figures used only to estimate channel strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardwareProfile {
    pub single_qubit_error: f64,
    pub two_qubit_error: f64,
    pub t1_us: f64,
    pub t2_us: f64,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self {
            single_qubit_error: 1.56e-3,
            two_qubit_error: 1.25e-2,
            t1_us: 48.07,
            t2_us: 8.108,
        }
    }
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<(), CliError> {
        let fields = [
            ("single_qubit_error", self.single_qubit_error),
            ("two_qubit_error", self.two_qubit_error),
            ("t1_us", self.t1_us),
            ("t2_us", self.t2_us),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("hardware.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Amplitude-damping strength `γ = 1 - exp(-t/T1)` for a layer lasting `t` µs.
    pub fn damping_gamma(&self, layer_duration_us: f64) -> f64 {
        -(-layer_duration_us / self.t1_us).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub output: PathBuf,
    pub seed: u64,
    pub problem: ProblemSpec,
    pub simulate: SimulateConfig,
    pub transition: TransitionConfig,
    pub datasets: DatasetConfig,
    pub discovery: DiscoveryConfig,
    pub validate: ValidateConfig,
    pub hardware: HardwareProfile,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output: PathBuf::from("qconv-out"),
            seed: 0,
            problem: ProblemSpec::default(),
            simulate: SimulateConfig::default(),
            transition: TransitionConfig::default(),
            datasets: DatasetConfig::default(),
            discovery: DiscoveryConfig::default(),
            validate: ValidateConfig::default(),
            hardware: HardwareProfile::default(),
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub p: Option<f64>,
    pub steps: Option<usize>,
    pub qubits: Option<usize>,
    pub channel: Option<ChannelKind>,
    pub shots: Option<u64>,
    pub restrict_terms: Option<Vec<String>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Applies flag overrides. `--p` and `--channel` replace the channel of
    /// every section; `--qubits` sets the grid to `2^q` points and the
    /// transition qubit list to `[q]`.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.output = out.clone();
        }
        if let Some(steps) = o.steps {
            self.simulate.steps = steps;
            self.datasets.steps = steps;
        }
        if let Some(q) = o.qubits {
            self.problem.points = 1usize.checked_shl(q as u32).unwrap_or(0);
            self.transition.qubits = vec![q];
        }
        if o.p.is_some() || o.channel.is_some() {
            let update = |c: &mut ChannelSpec| {
                if let Some(p) = o.p {
                    c.strength = p;
                }
                if let Some(k) = o.channel {
                    c.kind = k;
                }
            };
            let base = self.simulate.noise.first().copied().unwrap_or(ChannelSpec::depolarizing(8.3e-4));
            let mut sim = base;
            update(&mut sim);
            self.simulate.noise = vec![sim];
            update(&mut self.transition.channel);
            update(&mut self.datasets.channel);
        }
        if let Some(shots) = o.shots {
            self.transition.shots = Some(shots);
        }
        if let Some(terms) = &o.restrict_terms {
            self.discovery.restricted_terms = terms.clone();
        }
    }

    /// Checks every value before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.problem.validate().map_err(|e| CliError::config(e.to_string()))?;
        let check_channel = |section: &str, c: &ChannelSpec| -> Result<(), CliError> {
            if !(0.0..=1.0).contains(&c.strength) {
                return Err(CliError::config(format!(
                    "{section}: strength p = {} must lie in [0, 1]",
                    c.strength
                )));
            }
            Ok(())
        };
        for c in &self.simulate.noise {
            check_channel("simulate.noise", c)?;
        }
        check_channel("transition.channel", &self.transition.channel)?;
        check_channel("datasets.channel", &self.datasets.channel)?;
        if self.transition.qubits.iter().any(|&q| q == 0 || q > 12) {
            return Err(CliError::config("transition.qubits must lie in 1..=12"));
        }
        if self.transition.shots == Some(0) {
            return Err(CliError::config("transition.shots must be positive"));
        }
        if let Some(r) = &self.transition.readout {
            for (name, v) in [("e01", r.e01), ("e10", r.e10)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::config(format!("transition.readout.{name} = {v} must lie in [0, 1]")));
                }
            }
        }
        if self.datasets.count == 0 {
            return Err(CliError::config("datasets.count must be positive"));
        }
        if self.datasets.steps < 9 {
            return Err(CliError::config("datasets.steps must be at least 9 for the time stencil"));
        }
        self.discovery
            .regression
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        if self.discovery.restricted_terms.is_empty() {
            return Err(CliError::config("discovery.restricted_terms must not be empty"));
        }
        for t in &self.discovery.restricted_terms {
            t.parse::<qconv_core::Term>()
                .map_err(|e| CliError::config(format!("discovery.restricted_terms: {e}")))?;
        }
        if self.validate.solver.substeps == 0 {
            return Err(CliError::config("validate.solver.substeps must be positive"));
        }
        if !(self.validate.tolerance > 0.0) {
            return Err(CliError::config("validate.tolerance must be positive"));
        }
        self.hardware.validate()?;
        Ok(())
    }

    pub fn dataset_root(&self) -> PathBuf {
        if self.datasets.dir.is_absolute() {
            self.datasets.dir.clone()
        } else {
            self.output.join(&self.datasets.dir)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("seed = 7\n[problem]\npoints = 64\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.problem.points, 64);
        assert_eq!(c.problem.dt, 0.02);
        assert_eq!(c.datasets.count, 54);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = RunConfig::from_toml("[datasets]\nsteps = 50\n").unwrap();
        c.apply(&Overrides {
            steps: Some(20),
            p: Some(0.01),
            channel: Some(ChannelKind::BitFlip),
            qubits: Some(4),
            ..Default::default()
        });
        assert_eq!(c.datasets.steps, 20);
        assert_eq!(c.simulate.steps, 20);
        assert_eq!(c.problem.points, 16);
        assert_eq!(c.transition.qubits, vec![4]);
        assert_eq!(c.simulate.noise, vec![ChannelSpec { kind: ChannelKind::BitFlip, strength: 0.01 }]);
        assert_eq!(c.datasets.channel.kind, ChannelKind::BitFlip);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let bad = [
            "[problem]\npoints = 100\n",
            "[problem]\ndt = 0.0\n",
            "[problem]\ndt = -0.1\n",
            "[transition.channel]\nkind = \"depolarizing\"\nstrength = 1.5\n",
            "[[simulate.noise]]\nkind = \"bit_flip\"\nstrength = -0.1\n",
            "[discovery]\nrestricted_terms = [\"u\", \"w\"]\n",
            "[hardware]\nt1_us = 0.0\n",
        ];
        for text in bad {
            let c = RunConfig::from_toml(text).unwrap();
            let err = c.validate().unwrap_err();
            assert_eq!(err.kind(), "config", "{text}");
        }
        assert!(RunConfig::from_toml("[problem]\npoints = \"many\"\n").is_err());
    }

    #[test]
    fn damping_estimate() {
        let h = HardwareProfile::default();
        let g = h.damping_gamma(0.05);
        assert!((g - (1.0 - (-0.05f64 / 48.07).exp())).abs() < 1e-15);
        assert!(g > 0.0 && g < 2e-3);
    }
}
