//! Natural cubic spline interpolation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || !x.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "spline needs at least two strictly increasing knots with one value each".into(),
            ));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the interior second derivatives
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let (h0, h1) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    /// Value and first derivative; constant extrapolation of the end values
    /// outside the knot range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        if t <= self.x[0] {
            return (self.y[0], 0.0);
        }
        if t >= self.x[n - 1] {
            return (self.y[n - 1], 0.0);
        }
        let i = self
            .x
            .partition_point(|v| *v <= t)
            .saturating_sub(1)
            .min(n - 2);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h
            + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (v, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interpolates_knots_and_reproduces_lines() {
        let x = vec![0.0, 0.5, 1.7, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let s = NaturalSpline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_abs_diff_eq!(s.eval(*xi).0, *yi, epsilon = 1e-14);
        }
        let (v, d) = s.eval(2.2);
        assert_abs_diff_eq!(v, 3.4, epsilon = 1e-13);
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn second_derivative_vanishes_at_ends_and_is_continuous() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y = vec![0.0, 1.0, -0.5, 2.0, 0.3, 0.0];
        let s = NaturalSpline::new(x, y).unwrap();
        assert_eq!(s.m[0], 0.0);
        assert_eq!(s.m[5], 0.0);
        let h = 1e-6;
        for k in 1..5 {
            let t = k as f64;
            let left = s.eval(t - h);
            let right = s.eval(t + h);
            assert!((left.0 - right.0).abs() < 1e-5);
            assert!((left.1 - right.1).abs() < 1e-4);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = NaturalSpline::new(vec![0.0, 1.0, 2.5, 4.0], vec![1.0, 3.0, 2.0, 0.5]).unwrap();
        for t in [0.3, 1.2, 3.1] {
            let fd = (s.eval(t + 1e-6).0 - s.eval(t - 1e-6).0) / 2e-6;
            assert_abs_diff_eq!(s.eval(t).1, fd, epsilon = 1e-7);
        }
    }
}
