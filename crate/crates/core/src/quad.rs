//! Product quadrature over `R^n = R^N x R^(n-N)` in polar coordinates on the
//! first stratum.
//!
//! Lebesgue measure is the Haar measure of the group, so every integral is
//! an ordinary one: `dx = rho^(N-1) d rho d sigma(S^(N-1)) dx''`. The radial
//! factor uses Gauss-Legendre panels in `ln rho` between the support seams,
//! so every node has `|x'| > 0` and power-like integrands are captured almost
//! exactly. Higher-strata coordinates use tensor Gauss-Legendre panels
//! between their seams.
//!
//! Every integral is computed at the requested refinement level and at the
//! level below; the difference is the reported error estimate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{radius, Field, Support};
use crate::gauss::{gauss_legendre, gauss_legendre_on};
use crate::group::StratifiedGroup;

/// Grid parameters. `None` bounds fall back to the field's declared support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    /// Radial panels per seam-to-seam segment at level 0.
    pub panels: usize,
    pub panel_order: usize,
    /// Points per great circle at level 0.
    pub angular_res: usize,
    /// Half-width of the higher-strata box (all coordinates).
    #[serde(rename = "box")]
    pub box_half_width: Option<f64>,
    /// Panels per seam-to-seam segment of each higher-strata axis at level 0.
    pub box_panels: usize,
    pub box_order: usize,
    pub level: u32,
    /// Replace the sphere rule by a single direction; exact only for
    /// integrands that are radial in `x'`.
    pub radial_fast_path: bool,
    /// Permit the tensor sphere rule for `N > 3`.
    pub allow_high_dim: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rho_min: None,
            rho_max: None,
            panels: 2,
            panel_order: 12,
            angular_res: 16,
            box_half_width: None,
            box_panels: 2,
            box_order: 12,
            level: 1,
            radial_fast_path: false,
            allow_high_dim: false,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.panels < 2 || self.box_panels < 2 {
            return bad("panels and box_panels must be at least 2".into());
        }
        if self.panel_order == 0 || self.box_order == 0 {
            return bad("panel orders must be positive".into());
        }
        if self.angular_res < 4 {
            return bad("angular_res must be at least 4".into());
        }
        if let (Some(lo), Some(hi)) = (self.rho_min, self.rho_max) {
            if !(lo > 0.0 && hi > lo) {
                return bad(format!("need 0 < rho_min < rho_max, got {lo}, {hi}"));
            }
        }
        if let Some(lo) = self.rho_min {
            if !(lo > 0.0) {
                return bad(format!("rho_min must be positive, got {lo}"));
            }
        }
        if let Some(b) = self.box_half_width {
            if !(b > 0.0) {
                return bad(format!("box half-width must be positive, got {b}"));
            }
        }
        Ok(())
    }
}

/// Value with the refinement-difference error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A concrete product rule at one refinement level.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    dim: usize,
    first: usize,
    level: i64,
    spec: GridSpec,
    support: Support,
    radial: Vec<(f64, f64)>,
    angular: Vec<(Vec<f64>, f64)>,
    upper: Vec<Vec<(f64, f64)>>,
}

fn scaled_count(base: usize, level: i64) -> usize {
    let c = if level >= 0 {
        base << level
    } else {
        base.div_ceil(1 << (-level))
    };
    c.max(1)
}

/// Surface area of `S^(d-1)`.
pub fn sphere_area(d: usize) -> f64 {
    // 2 pi^(d/2) / Gamma(d/2)
    let half = d as f64 / 2.0;
    let mut gamma = if d.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut s = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while s < half {
        gamma *= s;
        s += 1.0;
    }
    2.0 * PI.powf(half) / gamma
}

fn circle_rule(m: usize) -> Vec<(Vec<f64>, f64)> {
    let w = 2.0 * PI / m as f64;
    (0..m)
        .map(|j| {
            let phi = 2.0 * PI * (j as f64 + 0.5) / m as f64;
            (vec![phi.cos(), phi.sin()], w)
        })
        .collect()
}

/// Product rule on `S^(d-1)` with `m` points per circle.
fn sphere_rule(d: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    match d {
        1 => vec![(vec![-1.0], 1.0), (vec![1.0], 1.0)],
        2 => circle_rule(m),
        3 => {
            // Gauss in z = cos(theta), trapezoid in phi
            let (z, wz) = gauss_legendre((m / 2).max(1));
            let circle = circle_rule(m);
            let mut out = Vec::with_capacity(z.len() * m);
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).sqrt();
                for (u, wu) in &circle {
                    out.push((vec![s * u[0], s * u[1], *zi], wi * wu));
                }
            }
            out
        }
        _ => {
            // x = (cos t, sin t * y), y on S^(d-2), measure sin^(d-2) t dt
            let inner = sphere_rule(d - 1, m);
            let mut out = Vec::new();
            for (t, wt) in gauss_legendre_on((m / 2).max(1), 0.0, PI) {
                let (s, c) = t.sin_cos();
                let wt = wt * s.powi(d as i32 - 2);
                for (y, wy) in &inner {
                    let mut p = Vec::with_capacity(d);
                    p.push(c);
                    p.extend(y.iter().map(|v| s * v));
                    out.push((p, wt * wy));
                }
            }
            out
        }
    }
}

fn segments(breaks: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
    pts.push(hi);
    pts.windows(2).map(|w| (w[0], w[1])).collect()
}

impl QuadratureGrid {
    /// Builds the grid for a field with the given support on `group`.
    pub fn new(group: &StratifiedGroup, spec: &GridSpec, support: &Support) -> Result<Self> {
        spec.validate()?;
        support.check_group(group)?;
        Self::build(
            group.dim(),
            group.first_stratum_dim(),
            spec,
            support,
            spec.level as i64,
        )
    }

    fn build(
        dim: usize,
        first: usize,
        spec: &GridSpec,
        support: &Support,
        level: i64,
    ) -> Result<Self> {
        if first > 3 && !spec.radial_fast_path {
            if !spec.allow_high_dim {
                return Err(Error::InvalidParameter(format!(
                    "first stratum of dimension {first} > 3 needs allow_high_dim (full tensor sphere rule)"
                )));
            }
            log::warn!(
                "tensor sphere rule on S^{}: cost grows like m^{}",
                first - 1,
                first - 1
            );
        }
        let lo = spec.rho_min.unwrap_or(support.rho_min);
        let hi = spec.rho_max.unwrap_or(support.rho_max);
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "radial range must satisfy 0 < rho_min < rho_max, got [{lo}, {hi}]"
            )));
        }

        let panels = scaled_count(spec.panels, level);
        let mut radial = Vec::new();
        for (a, b) in segments(&support.radial_breaks, lo, hi) {
            let (ua, ub) = (a.ln(), b.ln());
            let width = (ub - ua) / panels as f64;
            for p in 0..panels {
                let pa = ua + p as f64 * width;
                for (u, w) in gauss_legendre_on(spec.panel_order, pa, pa + width) {
                    let rho = u.exp();
                    // d rho = rho du, times the polar Jacobian rho^(N-1)
                    radial.push((rho, w * rho.powi(first as i32)));
                }
            }
        }

        let angular = if spec.radial_fast_path {
            let mut e = vec![0.0; first];
            e[0] = 1.0;
            vec![(e, sphere_area(first))]
        } else {
            sphere_rule(first, scaled_count(spec.angular_res, level))
        };

        let box_panels = scaled_count(spec.box_panels, level);
        let mut upper = Vec::with_capacity(dim - first);
        for breaks in &support.upper_breaks {
            let (a, b) = match spec.box_half_width {
                Some(h) => (-h, h),
                None => (breaks[0], *breaks.last().unwrap()),
            };
            let mut axis = Vec::new();
            for (sa, sb) in segments(breaks, a, b) {
                let width = (sb - sa) / box_panels as f64;
                for p in 0..box_panels {
                    let pa = sa + p as f64 * width;
                    axis.extend(gauss_legendre_on(spec.box_order, pa, pa + width));
                }
            }
            upper.push(axis);
        }

        Ok(Self {
            dim,
            first,
            level,
            spec: spec.clone(),
            support: support.clone(),
            radial,
            angular,
            upper,
        })
    }

    /// The same grid one refinement level down.
    pub fn coarsened(&self) -> Self {
        Self::build(
            self.dim,
            self.first,
            &self.spec,
            &self.support,
            self.level - 1,
        )
        .expect("coarser grid of a valid grid is valid")
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn radial_nodes(&self) -> usize {
        self.radial.len()
    }

    pub fn angular_nodes(&self) -> usize {
        self.angular.len()
    }

    pub fn upper_nodes(&self) -> Vec<usize> {
        self.upper.iter().map(Vec::len).collect()
    }

    pub fn node_count(&self) -> usize {
        self.radial.len() * self.angular.len() * self.upper.iter().map(Vec::len).product::<usize>()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Accumulates `weight * integrand(x)` for `outputs` integrands at once.
    ///
    /// Nodes are visited in a fixed order (radial panel-major, then angular,
    /// then higher strata) and summed with compensation, so results are
    /// bit-reproducible.
    pub fn sum_nodes<F>(&self, outputs: usize, mut integrand: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let mut sums = vec![CompensatedSum::default(); outputs];
        let mut vals = vec![0.0; outputs];
        let mut x = vec![0.0; self.dim];
        let mut idx = vec![0usize; self.upper.len()];
        for &(rho, wr) in &self.radial {
            for (u, wa) in &self.angular {
                for (xi, ui) in x.iter_mut().zip(u) {
                    *xi = rho * ui;
                }
                let w0 = wr * wa;
                idx.iter_mut().for_each(|i| *i = 0);
                loop {
                    let mut w = w0;
                    for (a, &i) in idx.iter().enumerate() {
                        let (t, wt) = self.upper[a][i];
                        x[self.first + a] = t;
                        w *= wt;
                    }
                    integrand(&x, &mut vals)?;
                    for (s, v) in sums.iter_mut().zip(&vals) {
                        let c = w * v;
                        if !c.is_finite() {
                            return Err(Error::SingularEvaluation { point: x.clone() });
                        }
                        s.add(c);
                    }
                    // odometer over the higher-strata axes
                    let mut a = 0;
                    loop {
                        if a == idx.len() {
                            break;
                        }
                        idx[a] += 1;
                        if idx[a] < self.upper[a].len() {
                            break;
                        }
                        idx[a] = 0;
                        a += 1;
                    }
                    if a == idx.len() {
                        break;
                    }
                }
            }
        }
        Ok(sums.iter().map(CompensatedSum::value).collect())
    }
}

/// `integral f dx` with error estimate `|I(level) - I(level - 1)|`.
pub fn integrate<F>(f: F, grid: &QuadratureGrid) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64,
{
    let run = |g: &QuadratureGrid| {
        g.sum_nodes(1, |x, out| {
            out[0] = f(x);
            Ok(())
        })
        .map(|v| v[0])
    };
    let fine = run(grid)?;
    let coarse = run(&grid.coarsened())?;
    Ok(Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

/// `(integral |f|^p |x'|^(sigma p) dx)^(1/p)`; `sigma` may be negative.
pub fn weighted_lp_norm(
    f: &dyn Field,
    first_stratum_dim: usize,
    sigma: f64,
    p: f64,
    grid: &QuadratureGrid,
) -> Result<Estimate> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Lebesgue exponent must be positive, got {p}"
        )));
    }
    let run = |g: &QuadratureGrid| -> Result<f64> {
        let s = g.sum_nodes(1, |x, out| {
            let v = f.value(x);
            out[0] = if v == 0.0 {
                0.0
            } else {
                v.abs().powf(p) * radius(first_stratum_dim, x).powf(sigma * p)
            };
            Ok(())
        })?;
        Ok(s[0].max(0.0).powf(1.0 / p))
    };
    let fine = run(grid)?;
    let coarse = run(&grid.coarsened())?;
    Ok(Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sphere_areas() {
        assert_abs_diff_eq!(sphere_area(1), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sphere_area(2), 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_area(4), 2.0 * PI * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(sphere_area(5), 8.0 * PI * PI / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn sphere_rules_have_correct_mass_and_unit_nodes() {
        for d in 1..=5 {
            let rule = sphere_rule(d, if d > 3 { 32 } else { 12 });
            let mass: f64 = rule.iter().map(|(_, w)| w).sum();
            assert_abs_diff_eq!(mass, sphere_area(d), epsilon = 1e-11);
            for (u, _) in &rule {
                assert_abs_diff_eq!(u.iter().map(|v| v * v).sum::<f64>(), 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sphere_rule_integrates_quadratic_moments() {
        // integral of u_1^2 over S^(d-1) = area / d
        for d in 2..=5 {
            let rule = sphere_rule(d, 32);
            let m: f64 = rule.iter().map(|(u, w)| w * u[d - 1] * u[d - 1]).sum();
            assert_abs_diff_eq!(m, sphere_area(d) / d as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn scaled_counts() {
        assert_eq!(scaled_count(4, 0), 4);
        assert_eq!(scaled_count(4, 2), 16);
        assert_eq!(scaled_count(3, -1), 2);
        assert_eq!(scaled_count(1, -3), 1);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::default();
        for v in [1e16, 1.0, -1e16, 1.0] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::default().validate().is_ok());
        let bad = GridSpec {
            panels: 1,
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = GridSpec {
            rho_min: Some(2.0),
            rho_max: Some(1.0),
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn high_dimensional_sphere_needs_opt_in() {
        let h2 = StratifiedGroup::heisenberg(2).unwrap();
        let support = Support::annulus(0.5, 1.0, &[1.0]).unwrap();
        assert!(QuadratureGrid::new(&h2, &GridSpec::default(), &support).is_err());
        let spec = GridSpec {
            allow_high_dim: true,
            angular_res: 8,
            ..GridSpec::default()
        };
        assert!(QuadratureGrid::new(&h2, &spec, &support).is_ok());
    }
}
