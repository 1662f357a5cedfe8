//! Admissible test functions: mollified power families and seeded random
//! bump fields. All of them vanish near `{x' = 0}` and carry analytic
//! partial derivatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{radius, Field, ScalarField, Support};
use crate::group::StratifiedGroup;

/// `s(t) = t^3 (10 - 15 t + 6 t^2)` clamped to `[0, 1]`, with `s'` and `s''`.
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        let u = 1.0 - t;
        (
            t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
            30.0 * t2 * u * u,
            60.0 * t * u * (1.0 - 2.0 * t),
        )
    }
}

/// Even 1-D cutoff: 1 on `|t| <= inner`, 0 on `|t| >= outer`, smoothstep
/// in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub inner: f64,
    pub outer: f64,
}

impl Plateau {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::InvalidParameter(format!(
                "plateau needs 0 < inner < outer, got {inner}, {outer}"
            )));
        }
        Ok(Self { inner, outer })
    }

    /// Value and derivative at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let a = t.abs();
        if a <= self.inner {
            return (1.0, 0.0);
        }
        let w = self.outer - self.inner;
        let (s, ds, _) = smoothstep((self.outer - a) / w);
        (s, -ds / w * t.signum())
    }

    pub fn breaks(&self) -> Vec<f64> {
        vec![-self.outer, -self.inner, self.inner, self.outer]
    }
}

/// Radial profile `P(rho)` with derivative.
pub trait RadialProfile: Send + Sync {
    fn eval(&self, rho: f64) -> (f64, f64);

    /// Radial seams; first is the inner edge of the support, last the outer.
    fn breaks(&self) -> Vec<f64>;
}

/// `P(rho) * prod_j psi(x''_j)` for a radial profile `P` and plateau `psi`.
pub struct ProfileField<P> {
    dim: usize,
    first: usize,
    profile: P,
    plateau: Plateau,
    support: Support,
    label: String,
}

impl<P: RadialProfile> ProfileField<P> {
    pub fn new(
        group: &StratifiedGroup,
        profile: P,
        plateau: Plateau,
        label: impl Into<String>,
    ) -> Result<Self> {
        let upper = group.dim() - group.first_stratum_dim();
        let support = Support::new(profile.breaks(), vec![plateau.breaks(); upper])?;
        Ok(Self {
            dim: group.dim(),
            first: group.first_stratum_dim(),
            profile,
            plateau,
            support,
            label: label.into(),
        })
    }

    pub fn profile(&self) -> &P {
        &self.profile
    }
}

impl<P: RadialProfile> Field for ProfileField<P> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (p, _) = self.profile.eval(radius(self.first, x));
        if p == 0.0 {
            return 0.0;
        }
        x[self.first..]
            .iter()
            .fold(p, |acc, t| acc * self.plateau.eval(*t).0)
    }

    fn has_partials(&self) -> bool {
        true
    }

    fn partials(&self, x: &[f64], out: &mut [f64]) {
        let rho = radius(self.first, x);
        let (p, dp) = self.profile.eval(rho);
        let upper: Vec<(f64, f64)> = x[self.first..]
            .iter()
            .map(|t| self.plateau.eval(*t))
            .collect();
        let psi: f64 = upper.iter().map(|u| u.0).product();
        for k in 0..self.first {
            out[k] = if rho > 0.0 {
                dp * x[k] / rho * psi
            } else {
                0.0
            };
        }
        for (j, (_, dpsi)) in upper.iter().enumerate() {
            let others: f64 = upper
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, u)| u.0)
                .product();
            out[self.first + j] = p * dpsi * others;
        }
    }
}

impl<P: RadialProfile> ScalarField for ProfileField<P> {
    fn support(&self) -> &Support {
        &self.support
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// `rho^beta`, tapered to zero in `ln rho` on `[eps / taper, eps]` and
/// `[r, taper * r]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedPower {
    pub beta: f64,
    pub eps: f64,
    pub r: f64,
    pub taper: f64,
}

impl RadialProfile for MollifiedPower {
    fn eval(&self, rho: f64) -> (f64, f64) {
        let lk = self.taper.ln();
        let lo = self.eps / self.taper;
        let hi = self.r * self.taper;
        if rho <= lo || rho >= hi {
            return (0.0, 0.0);
        }
        let (tin, dtin, _) = smoothstep((rho / lo).ln() / lk);
        let (tout, dtout, _) = smoothstep((hi / rho).ln() / lk);
        let t = tin * tout;
        // d/d rho of the tapers, through u = ln rho
        let dt = (dtin * tout - tin * dtout) / (lk * rho);
        let pw = rho.powf(self.beta);
        (pw * t, pw * (self.beta / rho * t + dt))
    }

    fn breaks(&self) -> Vec<f64> {
        vec![self.eps / self.taper, self.eps, self.r, self.r * self.taper]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    H1,
    H2,
    H3,
    Bump,
    Random,
}

/// Parameters of a mollified extremizer (or a plain bump / random field).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremizerFamily {
    pub kind: FamilyKind,
    pub beta: f64,
    pub eps: f64,
    pub r: f64,
    pub r_prime: f64,
    /// Log-ratio of each radial taper: the field vanishes below
    /// `eps / taper` and above `taper * r`.
    #[serde(default = "default_taper")]
    pub taper: f64,
}

pub fn default_taper() -> f64 {
    10.0
}

impl ExtremizerFamily {
    pub fn new(kind: FamilyKind, beta: f64, eps: f64, r: f64, r_prime: f64) -> Result<Self> {
        let fam = Self {
            kind,
            beta,
            eps,
            r,
            r_prime,
            taper: default_taper(),
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn with_taper(mut self, taper: f64) -> Result<Self> {
        self.taper = taper;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.eps > 0.0 && self.r > self.eps && self.r_prime > 0.0 && self.taper > 1.0;
        if !ok || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need finite beta, 0 < eps < R, R' > 0 and taper > 1, got beta={}, eps={}, R={}, R'={}, taper={}",
                self.beta, self.eps, self.r, self.r_prime, self.taper
            )));
        }
        Ok(())
    }

    /// Same family with different radii.
    pub fn at(&self, eps: f64, r: f64, r_prime: f64) -> Result<Self> {
        let fam = Self {
            eps,
            r,
            r_prime,
            ..self.clone()
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn build(&self, group: &StratifiedGroup) -> Result<ProfileField<MollifiedPower>> {
        self.validate()?;
        if self.kind == FamilyKind::Random {
            return Err(Error::InvalidParameter(
                "random fields are built with random_field".into(),
            ));
        }
        let beta = if self.kind == FamilyKind::Bump {
            0.0
        } else {
            self.beta
        };
        let profile = MollifiedPower {
            beta,
            eps: self.eps,
            r: self.r,
            taper: self.taper,
        };
        let label = format!(
            "{:?}(beta={}, eps={}, R={}, R'={})",
            self.kind, beta, self.eps, self.r, self.r_prime
        )
        .to_lowercase();
        ProfileField::new(
            group,
            profile,
            Plateau::new(self.r_prime, 2.0 * self.r_prime)?,
            label,
        )
    }
}

/// Mollified `|x'|^(-|N - alpha p| / p)`.
pub fn extremizer_h1(
    group: &StratifiedGroup,
    alpha: f64,
    p: f64,
    eps: f64,
    r: f64,
    r_prime: f64,
) -> Result<ProfileField<MollifiedPower>> {
    ExtremizerFamily::new(
        FamilyKind::H1,
        h1_exponent(group, alpha, p)?,
        eps,
        r,
        r_prime,
    )?
    .build(group)
}

pub fn h1_exponent(group: &StratifiedGroup, alpha: f64, p: f64) -> Result<f64> {
    let n = group.first_stratum_dim() as f64;
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    if n == alpha * p {
        return Err(Error::InvalidParameter(format!(
            "no extremizer exponent when N = alpha p (N={n}, alpha={alpha}, p={p})"
        )));
    }
    Ok(-(n - alpha * p).abs() / p)
}

/// Mollified `|x'|^((p(1-a) + b q) / (p - q))`.
#[allow(clippy::too_many_arguments)]
pub fn extremizer_h2(
    group: &StratifiedGroup,
    p: f64,
    q: f64,
    a: f64,
    b: f64,
    eps: f64,
    r: f64,
    r_prime: f64,
) -> Result<ProfileField<MollifiedPower>> {
    ExtremizerFamily::new(FamilyKind::H2, h2_exponent(p, q, a, b)?, eps, r, r_prime)?.build(group)
}

pub fn h2_exponent(p: f64, q: f64, a: f64, b: f64) -> Result<f64> {
    if p == q {
        return Err(Error::InvalidParameter(
            "h2 needs p != q; use the h3 family for p = q".into(),
        ));
    }
    Ok((p * (1.0 - a) + b * q) / (p - q))
}

/// Mollified `|x'|^beta` for any `beta != 0`.
pub fn extremizer_h3(
    group: &StratifiedGroup,
    beta: f64,
    eps: f64,
    r: f64,
    r_prime: f64,
) -> Result<ProfileField<MollifiedPower>> {
    if beta == 0.0 {
        return Err(Error::InvalidParameter(
            "h3 exponent must be nonzero".into(),
        ));
    }
    ExtremizerFamily::new(FamilyKind::H3, beta, eps, r, r_prime)?.build(group)
}

/// Shape of seeded random fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomFieldConfig {
    pub rho_min: f64,
    pub rho_max: f64,
    /// Higher-strata half-width; the plateau ends at half of it.
    pub box_half_width: f64,
    pub n_bumps: usize,
}

impl Default for RandomFieldConfig {
    fn default() -> Self {
        Self {
            rho_min: 0.25,
            rho_max: 4.0,
            box_half_width: 4.0,
            n_bumps: 3,
        }
    }
}

#[derive(Debug, Clone)]
struct Bump {
    center: Vec<f64>,
    inv_two_var: f64,
    coeff: f64,
}

/// `C(|x'|) * prod psi(x''_j) * sum_i c_i exp(-|x - m_i|^2 / (2 w_i^2))`,
/// with `C` rising on `[rho_min, 2 rho_min]` and falling on
/// `[rho_max / 2, rho_max]`.
#[derive(Debug, Clone)]
pub struct RandomField {
    dim: usize,
    first: usize,
    cfg: RandomFieldConfig,
    plateau: Plateau,
    bumps: Vec<Bump>,
    support: Support,
    label: String,
}

pub fn random_field(group: &StratifiedGroup, seed: u64, n_bumps: usize) -> Result<RandomField> {
    random_field_with(
        group,
        seed,
        &RandomFieldConfig {
            n_bumps,
            ..RandomFieldConfig::default()
        },
    )
}

pub fn random_field_with(
    group: &StratifiedGroup,
    seed: u64,
    cfg: &RandomFieldConfig,
) -> Result<RandomField> {
    if cfg.n_bumps == 0 {
        return Err(Error::InvalidParameter("n_bumps must be at least 1".into()));
    }
    if !(cfg.rho_min > 0.0 && cfg.rho_max >= 8.0 * cfg.rho_min && cfg.box_half_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "random field needs 0 < 8 rho_min <= rho_max and a positive box, got {cfg:?}"
        )));
    }
    let first = group.first_stratum_dim();
    let dim = group.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c_lo, c_hi) = (2.0 * cfg.rho_min, cfg.rho_max / 2.0);
    let bumps = (0..cfg.n_bumps)
        .map(|_| {
            // direction uniform on the sphere, radius uniform in log
            let mut dir: Vec<f64> = (0..first).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            while n < 1e-3 {
                dir = (0..first).map(|_| rng.gen_range(-1.0..1.0)).collect();
                n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            }
            let rho = (rng.gen_range(c_lo.ln()..c_hi.ln())).exp();
            let mut center: Vec<f64> = dir.iter().map(|v| v / n * rho).collect();
            let half = cfg.box_half_width / 4.0;
            center.extend((first..dim).map(|_| rng.gen_range(-half..half)));
            let w: f64 = rng.gen_range(0.4..0.8);
            Bump {
                center,
                inv_two_var: 1.0 / (2.0 * w * w),
                coeff: rng.gen_range(0.5..1.5),
            }
        })
        .collect();
    let plateau = Plateau::new(cfg.box_half_width / 2.0, cfg.box_half_width)?;
    let support = Support::new(
        vec![
            cfg.rho_min,
            2.0 * cfg.rho_min,
            cfg.rho_max / 2.0,
            cfg.rho_max,
        ],
        vec![plateau.breaks(); dim - first],
    )?;
    Ok(RandomField {
        dim,
        first,
        cfg: cfg.clone(),
        plateau,
        bumps,
        support,
        label: format!("random(seed={seed}, bumps={})", cfg.n_bumps),
    })
}

impl RandomField {
    fn radial_cutoff(&self, rho: f64) -> (f64, f64) {
        let (lo, hi) = (self.cfg.rho_min, self.cfg.rho_max);
        let (a, da, _) = smoothstep((rho - lo) / lo);
        let w = hi / 2.0;
        let (b, db, _) = smoothstep((hi - rho) / w);
        (a * b, da / lo * b - a * db / w)
    }

    fn gaussians(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut sum = 0.0;
        match grad {
            None => {
                for b in &self.bumps {
                    let d2: f64 = x
                        .iter()
                        .zip(&b.center)
                        .map(|(a, c)| (a - c) * (a - c))
                        .sum();
                    sum += b.coeff * (-d2 * b.inv_two_var).exp();
                }
            }
            Some(g) => {
                g.fill(0.0);
                for b in &self.bumps {
                    let d2: f64 = x
                        .iter()
                        .zip(&b.center)
                        .map(|(a, c)| (a - c) * (a - c))
                        .sum();
                    let e = b.coeff * (-d2 * b.inv_two_var).exp();
                    sum += e;
                    for ((gi, xi), ci) in g.iter_mut().zip(x).zip(&b.center) {
                        *gi -= 2.0 * b.inv_two_var * (xi - ci) * e;
                    }
                }
            }
        }
        sum
    }
}

impl Field for RandomField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (c, _) = self.radial_cutoff(radius(self.first, x));
        if c == 0.0 {
            return 0.0;
        }
        let psi: f64 = x[self.first..]
            .iter()
            .map(|t| self.plateau.eval(*t).0)
            .product();
        if psi == 0.0 {
            return 0.0;
        }
        c * psi * self.gaussians(x, None)
    }

    fn has_partials(&self) -> bool {
        true
    }

    fn partials(&self, x: &[f64], out: &mut [f64]) {
        let rho = radius(self.first, x);
        let (c, dc) = self.radial_cutoff(rho);
        let upper: Vec<(f64, f64)> = x[self.first..]
            .iter()
            .map(|t| self.plateau.eval(*t))
            .collect();
        let psi: f64 = upper.iter().map(|u| u.0).product();
        let outside_box = !upper.is_empty() && upper.iter().any(|u| u.0 == 0.0 && u.1 == 0.0);
        if (c == 0.0 && dc == 0.0) || outside_box {
            out.fill(0.0);
            return;
        }
        let g = self.gaussians(x, Some(out));
        for v in out.iter_mut() {
            *v *= c * psi;
        }
        if rho > 0.0 {
            for k in 0..self.first {
                out[k] += dc * x[k] / rho * psi * g;
            }
        }
        for (j, (_, dpsi)) in upper.iter().enumerate() {
            let others: f64 = upper
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, u)| u.0)
                .product();
            out[self.first + j] += c * dpsi * others * g;
        }
    }
}

impl ScalarField for RandomField {
    fn support(&self) -> &Support {
        &self.support
    }

    fn label(&self) -> &str {
        &self.label
    }
}
