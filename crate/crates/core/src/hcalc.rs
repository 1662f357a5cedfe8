//! Horizontal calculus: generators applied to fields, horizontal gradient and
//! divergence, and pointwise checks of the two radial identities
//!
//! ```text
//! |grad_H |x'|^g|        = |g| |x'|^(g-1)
//! div_H (x' / |x'|^g)    = (N - g) / |x'|^g
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{radius, Field};
use crate::group::StratifiedGroup;

/// How partial derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffMode {
    Analytic,
    Fd,
}

/// Values `(X_1 f, .., X_N f)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct HVector(pub Vec<f64>);

impl HVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// Central-difference step for coordinate value `xi`.
#[inline]
pub fn fd_step(xi: f64) -> f64 {
    (1e-5 * xi.abs()).max(1e-5)
}

fn checked_step(coord: usize, xi: f64) -> Result<(f64, f64, f64)> {
    let h = fd_step(xi);
    let (plus, minus) = (xi + h, xi - h);
    let width = plus - minus;
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::FdStepUnderflow { coord, value: xi });
    }
    Ok((plus, minus, width))
}

/// Full Euclidean gradient of `f` at `x`.
pub fn euclidean_gradient(f: &dyn Field, x: &[f64], mode: DiffMode) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    match mode {
        DiffMode::Analytic => {
            if !f.has_partials() {
                return Err(Error::MissingPartials(format!(
                    "{}-dimensional field",
                    f.dim()
                )));
            }
            f.partials(x, &mut out);
        }
        DiffMode::Fd => {
            let mut probe = x.to_vec();
            for (j, o) in out.iter_mut().enumerate() {
                let (plus, minus, width) = checked_step(j, x[j])?;
                probe[j] = plus;
                let fp = f.value(&probe);
                probe[j] = minus;
                let fm = f.value(&probe);
                probe[j] = x[j];
                *o = (fp - fm) / width;
            }
        }
    }
    Ok(out)
}

/// `grad_H f(x) = (X_1 f, .., X_N f)(x)`.
pub fn horizontal_gradient(
    group: &StratifiedGroup,
    f: &dyn Field,
    x: &[f64],
    mode: DiffMode,
) -> Result<HVector> {
    group.check_point(x)?;
    let grad = euclidean_gradient(f, x, mode)?;
    let mut out = vec![0.0; group.first_stratum_dim()];
    group.horizontal_from_partials(x, &grad, &mut out);
    Ok(HVector(out))
}

/// The Euler-type operator `x' . grad_H f`.
pub fn euler_derivative(
    group: &StratifiedGroup,
    f: &dyn Field,
    x: &[f64],
    mode: DiffMode,
) -> Result<f64> {
    Ok(horizontal_gradient(group, f, x, mode)?.dot(x))
}

/// A horizontal vector field `x -> (v_1, .., v_N)(x)`.
pub trait HorizontalField: Send + Sync {
    fn value(&self, x: &[f64]) -> HVector;

    /// Row-major `N x n` Jacobian `dv_k/dx_j`; `None` without analytic form.
    fn jacobian(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// `div_H v (x) = sum_k X_k(v_k)(x)`.
pub fn horizontal_divergence(
    group: &StratifiedGroup,
    v: &dyn HorizontalField,
    x: &[f64],
    mode: DiffMode,
) -> Result<f64> {
    group.check_point(x)?;
    let n = group.dim();
    let big_n = group.first_stratum_dim();
    let jac = match mode {
        DiffMode::Analytic => v
            .jacobian(x)
            .ok_or_else(|| Error::MissingPartials("horizontal vector field".into()))?,
        DiffMode::Fd => {
            let mut jac = vec![0.0; big_n * n];
            let mut probe = x.to_vec();
            for j in 0..n {
                let (plus, minus, width) = checked_step(j, x[j])?;
                probe[j] = plus;
                let vp = v.value(&probe);
                probe[j] = minus;
                let vm = v.value(&probe);
                probe[j] = x[j];
                for k in 0..big_n {
                    jac[k * n + j] = (vp.0[k] - vm.0[k]) / width;
                }
            }
            jac
        }
    };
    let frame = group.frame(x);
    let mut div = 0.0;
    for k in 0..big_n {
        for j in 0..n {
            div += frame[k * n + j] * jac[k * n + j];
        }
    }
    Ok(div)
}

/// Outcome of a pointwise identity check over a sample of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub group: String,
    pub gamma: f64,
    pub mode: DiffMode,
    pub points: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub worst_point: Vec<f64>,
    pub worst_value: f64,
    pub worst_expected: f64,
}

impl IdentityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }
}

/// `|x'|^gamma` with its analytic gradient.
struct NormPower {
    dim: usize,
    first: usize,
    gamma: f64,
}

impl Field for NormPower {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        radius(self.first, x).powf(self.gamma)
    }

    fn has_partials(&self) -> bool {
        true
    }

    fn partials(&self, x: &[f64], out: &mut [f64]) {
        let rho = radius(self.first, x);
        let c = self.gamma * rho.powf(self.gamma - 2.0);
        for (k, o) in out.iter_mut().enumerate() {
            *o = if k < self.first { c * x[k] } else { 0.0 };
        }
    }
}

/// `x' / |x'|^gamma`.
struct RadialPowerField {
    dim: usize,
    first: usize,
    gamma: f64,
}

impl HorizontalField for RadialPowerField {
    fn value(&self, x: &[f64]) -> HVector {
        let s = radius(self.first, x).powf(-self.gamma);
        HVector(x[..self.first].iter().map(|v| v * s).collect())
    }

    fn jacobian(&self, x: &[f64]) -> Option<Vec<f64>> {
        let rho = radius(self.first, x);
        let a = rho.powf(-self.gamma);
        let b = self.gamma * rho.powf(-self.gamma - 2.0);
        let mut jac = vec![0.0; self.first * self.dim];
        for k in 0..self.first {
            for j in 0..self.first {
                let delta = if j == k { a } else { 0.0 };
                jac[k * self.dim + j] = delta - b * x[k] * x[j];
            }
        }
        Some(jac)
    }
}

fn check_points(group: &StratifiedGroup, points: &[Vec<f64>]) -> Result<()> {
    for p in points {
        group.check_point(p)?;
        if radius(group.first_stratum_dim(), p) == 0.0 {
            return Err(Error::SingularPoint { point: p.clone() });
        }
    }
    Ok(())
}

fn summarize(
    identity: &str,
    group: &StratifiedGroup,
    gamma: f64,
    mode: DiffMode,
    points: &[Vec<f64>],
    mut eval: impl FnMut(&[f64]) -> Result<(f64, f64, f64)>,
) -> Result<IdentityReport> {
    let mut report = IdentityReport {
        identity: identity.into(),
        group: group.name().into(),
        gamma,
        mode,
        points: points.len(),
        max_rel_error: 0.0,
        mean_rel_error: 0.0,
        worst_point: Vec::new(),
        worst_value: 0.0,
        worst_expected: 0.0,
    };
    let mut total = 0.0;
    for p in points {
        let (got, expected, scale) = eval(p)?;
        let err = (got - expected).abs() / expected.abs().max(scale).max(1e-300);
        total += err;
        if err > report.max_rel_error || report.worst_point.is_empty() {
            report.max_rel_error = err;
            report.worst_point = p.clone();
            report.worst_value = got;
            report.worst_expected = expected;
        }
    }
    if !points.is_empty() {
        report.mean_rel_error = total / points.len() as f64;
    }
    Ok(report)
}

/// Checks `|grad_H |x'|^gamma| = |gamma| |x'|^(gamma-1)` at every point.
///
/// Relative errors are taken against `max(|expected|, |x'|^(gamma-1))` so
/// that `gamma = 0` (expected value zero) is measured on the natural scale.
pub fn check_gradient_identity(
    group: &StratifiedGroup,
    gamma: f64,
    points: &[Vec<f64>],
    mode: DiffMode,
) -> Result<IdentityReport> {
    check_points(group, points)?;
    let field = NormPower {
        dim: group.dim(),
        first: group.first_stratum_dim(),
        gamma,
    };
    summarize("gradient", group, gamma, mode, points, |p| {
        let got = horizontal_gradient(group, &field, p, mode)?.norm();
        let rho = radius(field.first, p);
        let scale = rho.powf(gamma - 1.0);
        Ok((got, gamma.abs() * scale, scale))
    })
}

/// Checks `div_H(x'/|x'|^gamma) = (N - gamma)/|x'|^gamma` at every point.
///
/// Relative errors use `max(|expected|, |x'|^-gamma)` as denominator; the
/// individual terms of the divergence have that size even when `gamma = N`.
pub fn check_divergence_identity(
    group: &StratifiedGroup,
    gamma: f64,
    points: &[Vec<f64>],
    mode: DiffMode,
) -> Result<IdentityReport> {
    check_points(group, points)?;
    let big_n = group.first_stratum_dim();
    let v = RadialPowerField {
        dim: group.dim(),
        first: big_n,
        gamma,
    };
    summarize("divergence", group, gamma, mode, points, |p| {
        let got = horizontal_divergence(group, &v, p, mode)?;
        let scale = radius(big_n, p).powf(-gamma);
        Ok((got, (big_n as f64 - gamma) * scale, scale))
    })
}

/// Deterministic sample of points with `0.25 <= |x'| <= 2` and higher-strata
/// coordinates in `[-2, 2]`.
pub fn sample_points(group: &StratifiedGroup, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let big_n = group.first_stratum_dim();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<f64> = (0..group.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let rho = radius(big_n, &p);
        if (0.25..=2.0).contains(&rho) {
            out.push(p);
        }
    }
    out
}
