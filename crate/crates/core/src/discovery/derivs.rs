use crate::error::{Error, Result};
use crate::field::ProblemSpec;
use crate::spectral::SpectralOps;

/// Half-width of the widest centered time stencil (eighth order).
pub const TIME_HALF_WIDTH: usize = 4;

// centered first-derivative weights for offsets 1..=h, orders 2, 4, 6, 8
const CENTERED: [&[f64]; 4] = [
    &[1.0 / 2.0],
    &[2.0 / 3.0, -1.0 / 12.0],
    &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
    &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
];

/// `∂_x^d u` for `d = 0..=max_order`, computed spectrally.
pub fn spatial_derivatives(values: &[f64], spec: &ProblemSpec, ops: &SpectralOps, max_order: u32) -> Vec<Vec<f64>> {
    let coeffs = ops.analyze_real(values);
    let mut out = Vec::with_capacity(max_order as usize + 1);
    out.push(values.to_vec());
    for d in 1..=max_order {
        out.push(ops.derivative_from_coeffs(&coeffs, d, spec.length));
    }
    out
}

/// Time derivative at snapshot `i`.
///
/// Uses the widest centered stencil that fits (up to eighth order) and a
/// second-order one-sided formula at the two end points.
pub fn time_derivative(snapshots: &[Vec<f64>], dt: f64, i: usize) -> Result<Vec<f64>> {
    let t = snapshots.len();
    if t < 3 {
        return Err(Error::TooFewSnapshots(t));
    }
    let n = snapshots[0].len();
    let h = i.min(t - 1 - i).min(TIME_HALF_WIDTH);
    let mut out = vec![0.0; n];
    if h == 0 {
        let (a, b, c, s) = if i == 0 {
            (&snapshots[0], &snapshots[1], &snapshots[2], 1.0)
        } else {
            (&snapshots[t - 1], &snapshots[t - 2], &snapshots[t - 3], -1.0)
        };
        for j in 0..n {
            out[j] = s * (-3.0 * a[j] + 4.0 * b[j] - c[j]) / (2.0 * dt);
        }
        return Ok(out);
    }
    for (m, w) in CENTERED[h - 1].iter().enumerate() {
        let (fwd, bwd) = (&snapshots[i + m + 1], &snapshots[i - m - 1]);
        for j in 0..n {
            out[j] += w * (fwd[j] - bwd[j]);
        }
    }
    for v in &mut out {
        *v /= dt;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_grid;

    #[test]
    fn stencils_are_exact_on_polynomials() {
        // a centered stencil of order 2h differentiates t^(2h) exactly
        let dt = 0.1;
        let samples = |deg: i32| -> Vec<Vec<f64>> {
            (0..12).map(|i| vec![(i as f64 * dt).powi(deg)]).collect()
        };
        for (i, deg) in [(4usize, 8), (3, 6), (2, 4), (1, 2), (0, 2), (11, 2)] {
            let s = samples(deg);
            let d = time_derivative(&s, dt, i).unwrap()[0];
            let t = i as f64 * dt;
            let exact = deg as f64 * t.powi(deg - 1);
            assert!((d - exact).abs() < 1e-9, "i={i} deg={deg} {d} vs {exact}");
        }
    }

    #[test]
    fn eighth_order_on_travelling_wave() {
        let dt = 0.02;
        let snaps: Vec<Vec<f64>> = (0..20).map(|i| vec![(3.0 * (i as f64 * dt)).sin()]).collect();
        let d = time_derivative(&snaps, dt, 10).unwrap()[0];
        assert!((d - 3.0 * (3.0 * 10.0 * dt).cos()).abs() < 1e-11);
    }

    #[test]
    fn too_few_snapshots() {
        assert!(matches!(
            time_derivative(&[vec![0.0], vec![1.0]], 0.1, 0),
            Err(Error::TooFewSnapshots(2))
        ));
    }

    #[test]
    fn spatial_derivatives_of_cosine() {
        let spec = ProblemSpec::with_qubits(5).unwrap();
        let ops = SpectralOps::new(spec.points);
        let x = make_grid(&spec);
        let u: Vec<f64> = x.iter().map(|x| (2.0 * x).cos()).collect();
        let d = spatial_derivatives(&u, &spec, &ops, 4);
        for (j, x) in x.iter().enumerate() {
            assert!((d[1][j] + 2.0 * (2.0 * x).sin()).abs() < 1e-12);
            assert!((d[2][j] + 4.0 * (2.0 * x).cos()).abs() < 1e-12);
            assert!((d[4][j] - 16.0 * (2.0 * x).cos()).abs() < 1e-10);
        }
    }
}
