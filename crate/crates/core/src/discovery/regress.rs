use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows buffered before they are folded into the triangular factor.
const CHUNK_ROWS: usize = 4096;

/// Settings for sequentially thresholded least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionConfig {
    /// Coefficients with `|ξ| < threshold` are removed from the support.
    pub threshold: f64,
    /// Ridge weight on unit-RMS columns, per row of data.
    pub ridge: f64,
    pub max_iterations: usize,
    /// Only these terms may enter the model.
    pub restrict: Option<Vec<String>>,
    /// Use every `stride`-th usable time level.
    pub stride: usize,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            threshold: 5e-4,
            ridge: 1e-5,
            max_iterations: 25,
            restrict: None,
            stride: 1,
        }
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidSpec(format!("threshold {} must be non-negative", self.threshold)));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidSpec(format!("ridge {} must be non-negative", self.ridge)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidSpec("stride must be positive".into()));
        }
        Ok(())
    }
}

/// Dense least-squares problem `A ξ ≈ b`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(cols: usize, data: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if cols == 0 || data.len() != rhs.len() * cols {
            return Err(Error::DimensionMismatch {
                expected: rhs.len() * cols,
                actual: data.len(),
            });
        }
        Ok(Self {
            rows: rhs.len(),
            cols,
            data,
            rhs,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Triangular factor `R` of the augmented matrix `[A | b]`, built by folding
/// row blocks through Householder QR so the full design never has to be held.
#[derive(Debug, Clone)]
pub(crate) struct Factor {
    width: usize,
    r: DMatrix<f64>,
    pending: Vec<f64>,
    pending_rows: usize,
    rows: usize,
}

impl Factor {
    pub fn new(terms: usize) -> Self {
        let width = terms + 1;
        Self {
            width,
            r: DMatrix::zeros(0, width),
            pending: Vec::with_capacity(CHUNK_ROWS * width),
            pending_rows: 0,
            rows: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows + self.pending_rows
    }

    /// Appends one row `[a_1 … a_m, b]`.
    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.width);
        self.pending.extend_from_slice(row);
        self.pending_rows += 1;
        if self.pending_rows == CHUNK_ROWS {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.pending_rows == 0 {
            return;
        }
        let block = DMatrix::from_row_slice(self.pending_rows, self.width, &self.pending);
        self.rows += self.pending_rows;
        self.fold(block);
        self.pending.clear();
        self.pending_rows = 0;
    }

    fn fold(&mut self, block: DMatrix<f64>) {
        let stacked_rows = self.r.nrows() + block.nrows();
        let mut stacked = DMatrix::zeros(stacked_rows, self.width);
        stacked.rows_mut(0, self.r.nrows()).copy_from(&self.r);
        stacked.rows_mut(self.r.nrows(), block.nrows()).copy_from(&block);
        self.r = stacked.qr().r();
    }

    /// Combines another factor (rows appended after this one's).
    pub fn merge(&mut self, mut other: Factor) {
        self.flush();
        other.flush();
        self.rows += other.rows;
        self.fold(other.r);
    }

    pub fn finish(mut self) -> Self {
        self.flush();
        if self.r.nrows() < self.width {
            let mut padded = DMatrix::zeros(self.width, self.width);
            padded.rows_mut(0, self.r.nrows()).copy_from(&self.r);
            self.r = padded;
        }
        self
    }

    fn from_design(design: &DesignMatrix) -> Self {
        let mut f = Factor::new(design.cols);
        let mut row = vec![0.0; design.cols + 1];
        for i in 0..design.rows {
            row[..design.cols].copy_from_slice(design.row(i));
            row[design.cols] = design.rhs[i];
            f.push(&row);
        }
        f.finish()
    }
}

/// Outcome of a thresholded fit on a factor.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Fit {
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
}

/// Sequentially thresholded ridge regression on an accumulated factor.
///
/// Columns are scaled to unit RMS before the ridge penalty `λ·rows·‖ξ‖²` is
/// applied, which makes the result invariant to duplicating the data.
/// Thresholding acts on the unscaled coefficients. Once the support settles it
/// is refit without the penalty, pruning again until no coefficient is below
/// the threshold.
pub(crate) fn regress_factor(factor: &Factor, allowed: &[bool], cfg: &RegressionConfig) -> Result<Fit> {
    cfg.validate()?;
    let m = factor.width - 1;
    let rows = factor.rows();
    if rows == 0 {
        return Err(Error::TooFewSnapshots(0));
    }
    let r11 = factor.r.view((0, 0), (m, m));
    let r12 = factor.r.view((0, m), (m, 1)).column(0).clone_owned();
    let r22 = factor.r[(m, m)];
    let rms: Vec<f64> = (0..m)
        .map(|i| r11.column(i).norm() / (rows as f64).sqrt())
        .collect();
    let scale_floor = rms.iter().cloned().fold(0.0, f64::max) * 1e-14;

    let mut support: Vec<usize> = (0..m)
        .filter(|&i| allowed[i] && rms[i] > scale_floor)
        .collect();

    let solve = |support: &[usize], ridge: f64| -> Result<Vec<f64>> {
        let s = support.len();
        let extra = if ridge > 0.0 { s } else { 0 };
        let mut a = DMatrix::zeros(m + extra, s);
        let mut b = DVector::zeros(m + extra);
        for (c, &i) in support.iter().enumerate() {
            a.view_mut((0, c), (m, 1)).copy_from(&(r11.column(i) / rms[i]));
        }
        b.rows_mut(0, m).copy_from(&r12);
        if ridge > 0.0 {
            let w = (ridge * rows as f64).sqrt();
            for c in 0..s {
                a[(m + c, c)] = w;
            }
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if ridge == 0.0 && !(smin > 1e-12 * smax) {
            return Err(Error::RankDeficient);
        }
        let x = svd
            .solve(&b, 0.0)
            .map_err(|e| Error::NoConvergence(e.to_string()))?;
        Ok(support.iter().zip(x.iter()).map(|(&i, v)| v / rms[i]).collect())
    };

    let mut iterations = 0;
    if cfg.ridge > 0.0 {
        loop {
            if support.is_empty() {
                break;
            }
            let coef = solve(&support, cfg.ridge)?;
            let kept: Vec<usize> = support
                .iter()
                .zip(&coef)
                .filter(|(_, c)| c.abs() >= cfg.threshold)
                .map(|(&i, _)| i)
                .collect();
            iterations += 1;
            if kept.len() == support.len() || iterations >= cfg.max_iterations {
                support = kept;
                break;
            }
            support = kept;
        }
    }

    let mut coefficients = vec![0.0; m];
    loop {
        if support.is_empty() {
            coefficients.iter_mut().for_each(|c| *c = 0.0);
            break;
        }
        let coef = solve(&support, 0.0)?;
        let kept: Vec<usize> = support
            .iter()
            .zip(&coef)
            .filter(|(_, c)| c.abs() >= cfg.threshold)
            .map(|(&i, _)| i)
            .collect();
        if kept.len() == support.len() {
            coefficients.iter_mut().for_each(|c| *c = 0.0);
            for (&i, c) in support.iter().zip(coef) {
                coefficients[i] = c;
            }
            break;
        }
        support = kept;
    }

    let xi = DVector::from_column_slice(&coefficients);
    let resid = (&r11 * &xi - &r12).norm_squared() + r22 * r22;
    Ok(Fit {
        coefficients,
        residual_rms: (resid / rows as f64).sqrt(),
    })
}

/// Sparse fit of `A ξ ≈ b` over all columns of `design`.
pub fn sparse_regress(design: &DesignMatrix, cfg: &RegressionConfig) -> Result<Vec<f64>> {
    let factor = Factor::from_design(design);
    Ok(regress_factor(&factor, &vec![true; design.cols], cfg)?.coefficients)
}
