use super::{closed_form_entry, hamming, TransitionMatrix};
use crate::error::{Error, Result};

/// Least-squares estimate of the per-layer strength `p` behind `m`, assuming
/// `m` was produced by `layers` layers of independent symmetric bit flips.
///
/// The Frobenius objective is minimised over the accumulated flip probability
/// `q` and mapped back through `p = 1 - (1-q)^{1/l}`. Entries sharing a
/// Hamming distance share a model value, so the objective reduces to
/// `Σ_d n_d (m_d(q) - mean_d)²` plus a constant.
pub fn fit_p(m: &TransitionMatrix, layers: usize) -> Result<f64> {
    if layers == 0 {
        return Err(Error::InvalidSpec("layer count must be positive".into()));
    }
    let n = m.qubits();
    let mut sums = vec![0.0; n + 1];
    let mut counts = vec![0.0; n + 1];
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let d = hamming(i, j) as usize;
            sums[d] += m.get(i, j);
            counts[d] += 1.0;
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
    let objective = |q: f64| -> f64 {
        (0..=n)
            .map(|d| {
                let r = closed_form_entry(n, q, d as u32) - means[d];
                counts[d] * r * r
            })
            .sum()
    };

    // coarse scan on a grid dense near zero, then golden-section refinement
    let mut grid: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    grid.extend((0..=160).map(|i| 10f64.powf(-16.0 + i as f64 * 0.1)));
    grid.retain(|q| (0.0..=1.0).contains(q));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let best = (0..grid.len())
        .min_by(|&a, &b| objective(grid[a]).total_cmp(&objective(grid[b])))
        .ok_or_else(|| Error::NoConvergence("empty search grid".into()))?;
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let q = golden_section(objective, lo, hi, 1e-16, 500)?;
    if !q.is_finite() {
        return Err(Error::NoConvergence(format!("non-finite estimate {q}")));
    }
    let q = q.clamp(0.0, 1.0);
    Ok(-(((-q).ln_1p()) / layers as f64).exp_m1())
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        if (b - a).abs() <= tol * (1.0 + a.abs()) {
            let (fa, fb) = (f(a), f(b));
            let mid = 0.5 * (a + b);
            // the bracket may sit on the boundary q = 0
            return Ok([(a, fa), (b, fb), (mid, f(mid))]
                .into_iter()
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .map(|x| x.0)
                .unwrap_or(mid));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(Error::NoConvergence(format!(
        "bracket [{a:e}, {b:e}] did not shrink below {tol:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::analytic_matrix;

    #[test]
    fn identity_fits_zero() {
        for l in [1, 10, 320] {
            let p = fit_p(&TransitionMatrix::identity(3), l).unwrap();
            assert!(p.abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn recovers_generating_strength() {
        for n in 1..=4 {
            for p in [8.3e-4, 1.6e-3, 0.03] {
                for l in [1, 10, 320] {
                    let m = analytic_matrix(n, p, l).unwrap();
                    let fit = fit_p(&m, l).unwrap();
                    assert!((fit - p).abs() < 1e-9, "n={n} p={p} l={l} fit={fit}");
                }
            }
        }
    }

    #[test]
    fn rejects_zero_layers() {
        assert!(fit_p(&TransitionMatrix::identity(2), 0).is_err());
    }
}
