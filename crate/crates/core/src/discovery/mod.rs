//! Sparse discovery of the effective right-hand side `F` in
//! `u_t + c u_x = F(u, u_x, …)` from snapshot series.

mod dataset;
mod derivs;
mod library;
mod regress;

pub use dataset::{DatasetMeta, SnapshotDataset};
pub use derivs::{spatial_derivatives, time_derivative, TIME_HALF_WIDTH};
pub use library::{Term, TermLibrary, MAX_ORDER};
pub use regress::{sparse_regress, DesignMatrix, RegressionConfig};

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ProblemSpec;
use crate::spectral::SpectralOps;
use regress::{regress_factor, Factor};

/// Time levels whose derivative uses the full-width centered stencil.
fn usable_times(len: usize, stride: usize) -> Result<Vec<usize>> {
    if len < 2 * TIME_HALF_WIDTH + 1 {
        return Err(Error::TooFewSnapshots(len));
    }
    Ok((TIME_HALF_WIDTH..len - TIME_HALF_WIDTH).step_by(stride).collect())
}

/// Calls `emit(row)` for every design row `[θ_1 … θ_m, u_t + c u_x]`.
fn for_each_row(
    ds: &SnapshotDataset,
    library: &TermLibrary,
    stride: usize,
    mut emit: impl FnMut(&[f64]),
) -> Result<()> {
    let spec = ds.spec;
    let ops = SpectralOps::new(spec.points);
    let max_order = library.max_order().max(1);
    let m = library.len();
    let mut row = vec![0.0; m + 1];
    for i in usable_times(ds.len(), stride)? {
        let derivs = spatial_derivatives(&ds.snapshots[i], &spec, &ops, max_order);
        let ut = time_derivative(&ds.snapshots, spec.dt, i)?;
        for j in 0..spec.points {
            for (c, t) in library.terms().iter().enumerate() {
                row[c] = t.evaluate_at(&derivs, j);
            }
            row[m] = ut[j] + spec.speed * derivs[1][j];
            emit(&row);
        }
    }
    Ok(())
}

/// Dense design matrix and target `b = u_t + c u_x` for one dataset.
pub fn build_design(ds: &SnapshotDataset, library: &TermLibrary, stride: usize) -> Result<DesignMatrix> {
    if stride == 0 {
        return Err(Error::InvalidSpec("stride must be positive".into()));
    }
    let m = library.len();
    let mut data = Vec::new();
    let mut rhs = Vec::new();
    for_each_row(ds, library, stride, |row| {
        data.extend_from_slice(&row[..m]);
        rhs.push(row[m]);
    })?;
    DesignMatrix::new(m, data, rhs)
}

/// Discovered right-hand side, coefficients aligned with `library`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseModel {
    pub library: TermLibrary,
    pub coefficients: Vec<f64>,
    pub threshold: f64,
    pub residual_rms: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    threshold: f64,
    residual_rms: f64,
    library: Vec<String>,
    coefficients: Vec<f64>,
}

impl SparseModel {
    /// Model with the given nonzero terms over the library they span.
    pub fn from_terms<S: AsRef<str>>(terms: &[(S, f64)]) -> Result<Self> {
        let names: Vec<&str> = terms.iter().map(|(n, _)| n.as_ref()).collect();
        Ok(Self {
            library: TermLibrary::from_names(&names)?,
            coefficients: terms.iter().map(|(_, c)| *c).collect(),
            threshold: 0.0,
            residual_rms: 0.0,
        })
    }

    /// Nonzero terms in library order.
    pub fn active(&self) -> Vec<(Term, f64)> {
        self.library
            .terms()
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != 0.0)
            .map(|(t, c)| (*t, *c))
            .collect()
    }

    pub fn support(&self) -> Vec<String> {
        self.active().iter().map(|(t, _)| t.name()).collect()
    }

    /// Coefficient of `name`; zero if it is in the library but inactive.
    pub fn coefficient(&self, name: &str) -> Result<f64> {
        let t: Term = name.parse()?;
        Ok(self
            .library
            .index_of(&t)
            .map_or(0.0, |i| self.coefficients[i]))
    }

    /// Highest derivative order among the active terms.
    pub fn max_order(&self) -> u32 {
        self.active().iter().map(|(t, _)| t.max_order()).max().unwrap_or(0)
    }

    /// `F` evaluated pointwise from `derivs[d] = ∂_x^d u`.
    pub fn evaluate(&self, derivs: &[Vec<f64>]) -> Vec<f64> {
        let n = derivs[0].len();
        let mut out = vec![0.0; n];
        for (t, c) in self.active() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += c * t.evaluate_at(derivs, j);
            }
        }
        out
    }

    /// `F(u)` with spatial derivatives taken spectrally.
    pub fn rhs(&self, u: &[f64], spec: &ProblemSpec, ops: &SpectralOps) -> Vec<f64> {
        self.evaluate(&spatial_derivatives(u, spec, ops, self.max_order()))
    }

    pub fn to_toml(&self) -> String {
        let file = ModelFile {
            threshold: self.threshold,
            residual_rms: self.residual_rms,
            library: self.library.names(),
            coefficients: self.coefficients.clone(),
        };
        toml::to_string(&file).expect("model serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let f: ModelFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if f.library.len() != f.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: f.library.len(),
                actual: f.coefficients.len(),
            });
        }
        Ok(Self {
            library: TermLibrary::from_names(&f.library)?,
            coefficients: f.coefficients,
            threshold: f.threshold,
            residual_rms: f.residual_rms,
        })
    }

    /// Human-readable equation, e.g. `u_t + c u_x = 0.0417 u - 0.0193 u^2`.
    pub fn equation(&self) -> String {
        let mut s = String::from("u_t + c u_x =");
        let active = self.active();
        if active.is_empty() {
            s.push_str(" 0");
        }
        for (i, (t, c)) in active.iter().enumerate() {
            let sign = if *c < 0.0 { "-" } else { "+" };
            if i == 0 {
                let lead = if *c < 0.0 { "-" } else { "" };
                let _ = write!(s, " {lead}{:.4e} {t}", c.abs());
            } else {
                let _ = write!(s, " {sign} {:.4e} {t}", c.abs());
            }
        }
        s
    }
}

/// Runs sparse regression on all datasets jointly.
///
/// Each dataset is reduced to a triangular factor independently (in
/// parallel); the factors are then merged in input order, so the result is
/// deterministic. With `cfg.restrict` only the listed terms may be active.
pub fn discover(datasets: &[SnapshotDataset], library: &TermLibrary, cfg: &RegressionConfig) -> Result<SparseModel> {
    cfg.validate()?;
    let first = datasets.first().ok_or(Error::TooFewSnapshots(0))?;
    for (i, ds) in datasets.iter().enumerate() {
        if ds.spec != first.spec {
            return Err(Error::GridMismatch(format!("dataset {i} uses a different grid")));
        }
    }
    let allowed = match &cfg.restrict {
        Some(names) => library.mask(names)?,
        None => vec![true; library.len()],
    };
    let factors: Vec<Factor> = datasets
        .par_iter()
        .map(|ds| -> Result<Factor> {
            let mut f = Factor::new(library.len());
            for_each_row(ds, library, cfg.stride, |row| f.push(row))?;
            Ok(f)
        })
        .collect::<Result<_>>()?;
    let mut total = Factor::new(library.len());
    for f in factors {
        total.merge(f);
    }
    let total = total.finish();
    let fit = regress_factor(&total, &allowed, cfg)?;
    Ok(SparseModel {
        library: library.clone(),
        coefficients: fit.coefficients,
        threshold: cfg.threshold,
        residual_rms: fit.residual_rms,
    })
}
