//! Pseudo-spectral solver for `u_t + c u_x = F(u, u_x, …)` and error maps
//! against reference trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discovery::{SnapshotDataset, SparseModel};
use crate::error::{Error, Result};
use crate::field::{GridField, ProblemSpec};
use crate::spectral::{signed_wavenumber, SpectralOps};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// RK4 substeps per output interval `Δt`.
    pub substeps: usize,
    /// Zero modes with `|k| > N/3` in the nonlinear term.
    pub dealias: bool,
    /// Abort when `max|u|` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            substeps: 10,
            dealias: true,
            blowup_factor: 1e3,
        }
    }
}

struct Rhs<'a> {
    model: &'a SparseModel,
    ops: SpectralOps,
    transport: Vec<Complex64>,
    keep: Vec<bool>,
    multipliers: Vec<Vec<Complex64>>,
}

impl<'a> Rhs<'a> {
    fn new(model: &'a SparseModel, spec: ProblemSpec, cfg: &SolverConfig) -> Self {
        let ops = SpectralOps::new(spec.points);
        let n = spec.points as i64;
        let scale = spec.wavenumber_scale();
        let transport = (0..spec.points)
            .map(|j| Complex64::new(0.0, spec.speed * scale * signed_wavenumber(j, spec.points) as f64))
            .collect();
        let keep = (0..spec.points)
            .map(|j| !cfg.dealias || 3 * signed_wavenumber(j, spec.points).abs() <= n)
            .collect();
        let multipliers = (0..=model.max_order())
            .map(|d| ops.derivative_multipliers(d, spec.length))
            .collect();
        Self {
            model,
            ops,
            transport,
            keep,
            multipliers,
        }
    }

    fn eval(&self, u_hat: &[Complex64]) -> Vec<Complex64> {
        let derivs: Vec<Vec<f64>> = self
            .multipliers
            .iter()
            .map(|m| {
                let scaled: Vec<Complex64> = u_hat.iter().zip(m).map(|(c, k)| c * k).collect();
                self.ops.synthesize_real(&scaled)
            })
            .collect();
        let forcing = self.model.evaluate(&derivs);
        let mut f_hat = self.ops.analyze_real(&forcing);
        for (j, f) in f_hat.iter_mut().enumerate() {
            if !self.keep[j] {
                *f = Complex64::new(0.0, 0.0);
            }
            *f += self.transport[j] * u_hat[j];
        }
        f_hat
    }

    fn physical(&self, u_hat: &[Complex64]) -> Vec<f64> {
        self.ops.synthesize_real(u_hat)
    }
}

/// Integrates the model from `ic` for `steps` intervals of `Δt` and returns
/// the `steps + 1` snapshots.
pub fn solve(model: &SparseModel, ic: &GridField, steps: usize, cfg: &SolverConfig) -> Result<Vec<GridField>> {
    if cfg.substeps == 0 {
        return Err(Error::InvalidSpec("substeps must be positive".into()));
    }
    let spec = ic.spec;
    let rhs = Rhs::new(model, spec, cfg);
    let h = spec.dt / cfg.substeps as f64;
    let limit = cfg.blowup_factor * ic.max_abs().max(f64::MIN_POSITIVE);
    let mut u_hat = rhs.ops.analyze_real(&ic.values);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(ic.clone());
    let axpy = |a: &[Complex64], b: &[Complex64], s: f64| -> Vec<Complex64> {
        a.iter().zip(b).map(|(x, y)| x + y * s).collect()
    };
    for step in 1..=steps {
        for _ in 0..cfg.substeps {
            let k1 = rhs.eval(&u_hat);
            let k2 = rhs.eval(&axpy(&u_hat, &k1, h / 2.0));
            let k3 = rhs.eval(&axpy(&u_hat, &k2, h / 2.0));
            let k4 = rhs.eval(&axpy(&u_hat, &k3, h));
            for j in 0..u_hat.len() {
                u_hat[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
            }
        }
        let time = ic.time + step as f64 * spec.dt;
        let values = rhs.physical(&u_hat);
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !peak.is_finite() || peak > limit {
            return Err(Error::Unstable(time));
        }
        out.push(GridField::new(values, time, spec)?);
    }
    Ok(out)
}

/// Convenience wrapper returning the trajectory as a dataset.
pub fn solve_dataset(model: &SparseModel, ic: &GridField, steps: usize, cfg: &SolverConfig) -> Result<SnapshotDataset> {
    SnapshotDataset::from_fields(&solve(model, ic, steps, cfg)?, Default::default())
}

/// Normalised pointwise error `(u_model - u_ref) / scale(t)` over a trajectory.
///
/// `scale(t)` is the largest `|u_ref|` at that time, floored at `1e-3` of the
/// largest value over the whole trajectory so near-zero slices do not blow up.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ErrorMap {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Fraction of samples with `|e| ≤ tol`.
    pub fn coverage_within(&self, tol: f64) -> f64 {
        let total = self.values.iter().map(Vec::len).sum::<usize>();
        if total == 0 {
            return 0.0;
        }
        let inside = self.values.iter().flatten().filter(|v| v.abs() <= tol).count();
        inside as f64 / total as f64
    }
}

pub fn error_map(model: &[GridField], reference: &[GridField]) -> Result<ErrorMap> {
    if model.len() != reference.len() {
        return Err(Error::GridMismatch(format!(
            "{} model snapshots vs {} reference snapshots",
            model.len(),
            reference.len()
        )));
    }
    for (i, (a, b)) in model.iter().zip(reference).enumerate() {
        if a.spec != b.spec || (a.time - b.time).abs() > 1e-9 * (1.0 + b.time.abs()) {
            return Err(Error::GridMismatch(format!("snapshot {i} differs in grid or time")));
        }
    }
    let global = reference.iter().fold(0.0f64, |m, f| m.max(f.max_abs()));
    let floor = (1e-3 * global).max(f64::MIN_POSITIVE);
    let values = model
        .iter()
        .zip(reference)
        .map(|(a, b)| {
            let scale = b.max_abs().max(floor);
            a.values.iter().zip(&b.values).map(|(x, y)| (x - y) / scale).collect()
        })
        .collect();
    Ok(ErrorMap {
        times: reference.iter().map(|f| f.time).collect(),
        values,
    })
}
