//! Finite-difference stencils on uniform grids.
//!
//! Weights come from Fornberg's recursion, so any order and any offset
//! (central, one-sided, near-boundary) are available from one routine.

/// Weights for the `deriv`-th derivative at `x0` from samples at `nodes`.
pub fn fornberg_weights(nodes: &[f64], x0: f64, deriv: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > deriv, "need more nodes than the derivative order");
    let m = deriv;
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// A derivative operator on a uniform 1-D grid of `len` points.
///
/// Interior points use centred stencils; points near a non-periodic end use
/// shifted one-sided stencils with one extra point per derivative, which keeps
/// the formal order up to the boundary.
#[derive(Debug, Clone)]
pub struct Stencil1d {
    len: usize,
    periodic: bool,
    /// For each grid point: (first index, weights / h^deriv).
    rows: Vec<(isize, Vec<f64>)>,
}

impl Stencil1d {
    /// `order` is the formal accuracy order (even, ≥ 2); `deriv` is 1 or 2.
    pub fn new(len: usize, spacing: f64, deriv: usize, order: usize, periodic: bool) -> Self {
        assert!((1..=2).contains(&deriv), "only first and second derivatives");
        let centred = order + 1;
        let shifted = order + deriv;
        assert!(periodic || len >= shifted, "grid too short for the stencil");
        let half = (centred / 2) as isize;
        let scale = spacing.powi(deriv as i32);
        let weights = |width: usize, offset: isize| -> Vec<f64> {
            let nodes: Vec<f64> = (0..width).map(|k| k as f64).collect();
            fornberg_weights(&nodes, offset as f64, deriv)
                .into_iter()
                .map(|x| x / scale)
                .collect()
        };
        let interior = weights(centred, half);
        let n = len as isize;
        let rows = (0..n)
            .map(|i| {
                if periodic || (i - half >= 0 && i + half < n) {
                    (i - half, interior.clone())
                } else {
                    let lo = if i - half < 0 { 0 } else { n - shifted as isize };
                    (lo, weights(shifted, i - lo))
                }
            })
            .collect();
        Stencil1d { len, periodic, rows }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Applies the operator at point `i` to values fetched by `get`.
    #[inline]
    pub fn apply_at<T, F>(&self, i: usize, zero: T, mut get: F) -> T
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
        F: FnMut(usize) -> T,
    {
        let (lo, w) = &self.rows[i];
        let mut acc = zero;
        for (k, wk) in w.iter().enumerate() {
            let idx = lo + k as isize;
            let idx = if self.periodic {
                idx.rem_euclid(self.len as isize) as usize
            } else {
                idx as usize
            };
            acc = acc + get(idx) * *wk;
        }
        acc
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (0..self.len).map(|i| self.apply_at(i, 0.0, |k| values[k])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_weights() {
        let w = fornberg_weights(&[-1.0, 0.0, 1.0], 0.0, 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = fornberg_weights(&[-1.0, 0.0, 1.0], 0.0, 2);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_on_polynomials() {
        // an 8th-order stencil differentiates degree-8 polynomials exactly
        let h = 0.1;
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * h).collect();
        let p: Vec<f64> = xs.iter().map(|x| x.powi(8) - 3.0 * x.powi(5) + x).collect();
        let dp: Vec<f64> = xs.iter().map(|x| 8.0 * x.powi(7) - 15.0 * x.powi(4) + 1.0).collect();
        let d = Stencil1d::new(xs.len(), h, 1, 8, false).apply(&p);
        for (a, b) in d.iter().zip(&dp) {
            assert!((a - b).abs() < 1e-7 * b.abs().max(1.0), "{a} vs {b}");
        }
        let d2p: Vec<f64> = xs.iter().map(|x| 56.0 * x.powi(6) - 60.0 * x.powi(3)).collect();
        let d2 = Stencil1d::new(xs.len(), h, 2, 8, false).apply(&p);
        for (a, b) in d2.iter().zip(&d2p) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn periodic_derivative_of_sine() {
        let n = 64;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let d = Stencil1d::new(n, h, 1, 8, true).apply(&v);
        for (i, di) in d.iter().enumerate() {
            assert!((di - (i as f64 * h).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn convergence_order() {
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|i| (3.0 * i as f64 * h).exp()).collect();
            let d = Stencil1d::new(n, h, 1, 4, false).apply(&v);
            d.iter()
                .enumerate()
                .map(|(i, di)| (di - 3.0 * (3.0 * i as f64 * h).exp()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}
