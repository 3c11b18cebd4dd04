//! Piecewise cubic interpolation through 4-point stencils, used on the
//! published table rows in the interpolation experiment.
//!
//! Each panel `[x_i, x_{i+1}]` evaluates the Lagrange cubic through the
//! four data points centred on the panel (clamped at the ends), and
//! evaluation outside the data range extrapolates with the boundary
//! stencil. This mirrors the default interpolation of the tooling the
//! published crossing `Psi_1 = Psi_2 ~ 2.55` was produced with; a
//! shape-preserving (monotone Hermite) scheme extrapolates too flatly
//! and never produces that crossing at all.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct InterpolatingCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl InterpolatingCubic {
    /// Fit through `(xs[i], ys[i])`; `xs` must be strictly increasing
    /// with at least two points. With fewer than four points the single
    /// global interpolating polynomial is used.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::domain(
                "interpolation needs matching xs/ys with >= 2 points".to_string(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "interpolation abscissae must be strictly increasing".to_string(),
            ));
        }
        Ok(InterpolatingCubic {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        // panel owning x (boundary panels own everything outside)
        let panel = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let width = 4.min(n);
        let start = panel.saturating_sub(1).min(n - width);
        let xs = &self.xs[start..start + width];
        let ys = &self.ys[start..start + width];
        lagrange(xs, ys, x)
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut basis = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                basis *= (x - xj) / (xi - xj);
            }
        }
        acc += yi * basis;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_exactly() {
        let xs = [2.2, 2.3, 2.4, 2.5];
        let ys = [0.0158, 0.0152, 0.0139, 0.0118];
        let c = InterpolatingCubic::fit(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((c.eval(*x) - y).abs() < 1e-15);
        }
    }

    #[test]
    fn four_points_give_the_global_cubic() {
        // data from x^3 - 2x: the stencil cubic must reproduce it
        // everywhere, including extrapolation
        let f = |x: f64| x * x * x - 2.0 * x;
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = xs.map(f);
        let c = InterpolatingCubic::fit(&xs, &ys).unwrap();
        for x in [-0.5, 0.3, 1.7, 2.5, 3.8] {
            assert!((c.eval(x) - f(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn many_points_stay_exact_for_cubics() {
        let f = |x: f64| 0.5 * x * x * x - x * x + 3.0;
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let c = InterpolatingCubic::fit(&xs, &ys).unwrap();
        let mut x = -0.2;
        while x < 2.2 {
            assert!((c.eval(x) - f(x)).abs() < 1e-12, "x = {x}");
            x += 0.01;
        }
    }

    #[test]
    fn linear_data_is_reproduced_everywhere() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [2.0, 4.0, 6.0];
        let c = InterpolatingCubic::fit(&xs, &ys).unwrap();
        for x in [1.25, 2.5, 0.5, 3.5] {
            assert!((c.eval(x) - 2.0 * x).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn rejects_unsorted_input() {
        assert!(InterpolatingCubic::fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(InterpolatingCubic::fit(&[1.0], &[0.0]).is_err());
    }
}
