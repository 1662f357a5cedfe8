//! Scalar fields on the underlying `R^n` of a group.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::StratifiedGroup;

/// A pointwise-evaluable function with optional analytic partial derivatives.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn has_partials(&self) -> bool {
        false
    }

    /// Writes `df/dx_i` for every coordinate into `out`. Only called when
    /// [`Field::has_partials`] is true.
    fn partials(&self, _x: &[f64], _out: &mut [f64]) {
        unreachable!("field has no analytic partials")
    }
}

/// Where a compactly supported field may be non-zero, together with the
/// seams (radii / coordinates where the field is only finitely smooth) that
/// quadrature panels should respect.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    /// Field vanishes for `|x'| < rho_min` (the excluded tube).
    pub rho_min: f64,
    /// Field vanishes for `|x'| > rho_max`.
    pub rho_max: f64,
    /// Sorted radial seams, starting at `rho_min` and ending at `rho_max`.
    pub radial_breaks: Vec<f64>,
    /// Per higher-strata coordinate: sorted seams, the ends being the box.
    pub upper_breaks: Vec<Vec<f64>>,
}

impl Support {
    pub fn new(radial_breaks: Vec<f64>, upper_breaks: Vec<Vec<f64>>) -> Result<Self> {
        let ok_sorted = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[0] < w[1]);
        if !ok_sorted(&radial_breaks) || !(radial_breaks[0] > 0.0) {
            return Err(Error::InadmissibleSupport(format!(
                "radial seams must be increasing and start above 0, got {radial_breaks:?}"
            )));
        }
        if let Some(bad) = upper_breaks.iter().find(|b| !ok_sorted(b)) {
            return Err(Error::InadmissibleSupport(format!(
                "box seams must be increasing, got {bad:?}"
            )));
        }
        Ok(Self {
            rho_min: radial_breaks[0],
            rho_max: *radial_breaks.last().unwrap(),
            radial_breaks,
            upper_breaks,
        })
    }

    /// Radial annulus `[rho_min, rho_max]` with symmetric boxes `[-b, b]`.
    pub fn annulus(rho_min: f64, rho_max: f64, upper_half_widths: &[f64]) -> Result<Self> {
        Self::new(
            vec![rho_min, rho_max],
            upper_half_widths.iter().map(|b| vec![-b, *b]).collect(),
        )
    }

    pub fn upper_dims(&self) -> usize {
        self.upper_breaks.len()
    }

    /// True when `x` lies in the closed support region.
    pub fn contains(&self, first_stratum_dim: usize, x: &[f64]) -> bool {
        let rho = radius(first_stratum_dim, x);
        rho >= self.rho_min
            && rho <= self.rho_max
            && x[first_stratum_dim..]
                .iter()
                .zip(&self.upper_breaks)
                .all(|(t, b)| *t >= b[0] && *t <= *b.last().unwrap())
    }

    pub fn check_group(&self, group: &StratifiedGroup) -> Result<()> {
        let upper = group.dim() - group.first_stratum_dim();
        if self.upper_breaks.len() != upper {
            return Err(Error::InadmissibleSupport(format!(
                "support describes {} higher-strata coordinates, group {} has {upper}",
                self.upper_breaks.len(),
                group.name()
            )));
        }
        Ok(())
    }
}

/// A compactly supported test function away from `{x' = 0}`.
pub trait ScalarField: Field {
    fn support(&self) -> &Support;

    fn label(&self) -> &str;
}

/// Euclidean norm of the first `first_stratum_dim` coordinates.
#[inline]
pub fn radius(first_stratum_dim: usize, x: &[f64]) -> f64 {
    x[..first_stratum_dim]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type PartialsFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Field given by closures. The support is declared, not enforced.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    value: Arc<ValueFn>,
    partials: Option<Arc<PartialsFn>>,
    support: Option<Support>,
    label: String,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("analytic", &self.partials.is_some())
            .finish()
    }
}

impl FnField {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            partials: None,
            support: None,
            label: label.into(),
        }
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = Some(support);
        self
    }
}

impl Field for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn has_partials(&self) -> bool {
        self.partials.is_some()
    }

    fn partials(&self, x: &[f64], out: &mut [f64]) {
        (self.partials.as_ref().expect("no analytic partials"))(x, out)
    }
}

impl ScalarField for FnField {
    fn support(&self) -> &Support {
        self.support
            .as_ref()
            .expect("FnField used as a ScalarField without a declared support")
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// `f o delta_lambda`.
pub struct Dilated<F> {
    inner: F,
    lambda: f64,
    scales: Vec<f64>,
    support: Support,
    label: String,
}

impl<F: ScalarField> Dilated<F> {
    pub fn new(group: &StratifiedGroup, inner: F, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dilation factor must be positive, got {lambda}"
            )));
        }
        let scales: Vec<f64> = group
            .coordinate_weights()
            .iter()
            .map(|w| lambda.powi(*w as i32))
            .collect();
        let big_n = group.first_stratum_dim();
        let s = inner.support();
        let support = Support::new(
            s.radial_breaks.iter().map(|r| r / lambda).collect(),
            s.upper_breaks
                .iter()
                .zip(&scales[big_n..])
                .map(|(b, sc)| b.iter().map(|t| t / sc).collect())
                .collect(),
        )?;
        let label = format!("{} o dilation({lambda})", inner.label());
        Ok(Self {
            inner,
            lambda,
            scales,
            support,
            label,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.scales).map(|(a, s)| a * s).collect()
    }
}

impl<F: ScalarField> Field for Dilated<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.scaled(x))
    }

    fn has_partials(&self) -> bool {
        self.inner.has_partials()
    }

    fn partials(&self, x: &[f64], out: &mut [f64]) {
        self.inner.partials(&self.scaled(x), out);
        for (o, s) in out.iter_mut().zip(&self.scales) {
            *o *= s;
        }
    }
}

impl<F: ScalarField> ScalarField for Dilated<F> {
    fn support(&self) -> &Support {
        &self.support
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// `g / |x'|`, the substitution linking the two L^2 statements.
pub struct OverRadius<F> {
    inner: F,
    first_stratum_dim: usize,
    label: String,
}

impl<F: ScalarField> OverRadius<F> {
    pub fn new(group: &StratifiedGroup, inner: F) -> Self {
        let label = format!("{} / |x'|", inner.label());
        Self {
            inner,
            first_stratum_dim: group.first_stratum_dim(),
            label,
        }
    }
}

impl<F: ScalarField> Field for OverRadius<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let rho = radius(self.first_stratum_dim, x);
        if rho == 0.0 {
            return 0.0;
        }
        self.inner.value(x) / rho
    }

    fn has_partials(&self) -> bool {
        self.inner.has_partials()
    }

    fn partials(&self, x: &[f64], out: &mut [f64]) {
        let rho = radius(self.first_stratum_dim, x);
        if rho == 0.0 {
            out.fill(0.0);
            return;
        }
        self.inner.partials(x, out);
        let g = self.inner.value(x);
        let rho3 = rho * rho * rho;
        for (k, o) in out.iter_mut().enumerate() {
            *o /= rho;
            if k < self.first_stratum_dim {
                *o -= g * x[k] / rho3;
            }
        }
    }
}

impl<F: ScalarField> ScalarField for OverRadius<F> {
    fn support(&self) -> &Support {
        self.inner.support()
    }

    fn label(&self) -> &str {
        &self.label
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn has_partials(&self) -> bool {
        (**self).has_partials()
    }
    fn partials(&self, x: &[f64], out: &mut [f64]) {
        (**self).partials(x, out)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn support(&self) -> &Support {
        (**self).support()
    }
    fn label(&self) -> &str {
        (**self).label()
    }
}

impl<T: Field + ?Sized> Field for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn has_partials(&self) -> bool {
        (**self).has_partials()
    }
    fn partials(&self, x: &[f64], out: &mut [f64]) {
        (**self).partials(x, out)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Box<T> {
    fn support(&self) -> &Support {
        (**self).support()
    }
    fn label(&self) -> &str {
        (**self).label()
    }
}
