//! Weighted Sobolev-type, Hardy and CKN inequalities as checkable cases.
//!
//! Each case compares a left-hand norm with the sharp constant times the
//! right-hand side, both computed by quadrature at two refinement levels.
//! `constant` is always the multiplier applied to the right-hand side, e.g.
//! `p / |N - alpha p|` for the Sobolev-type case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{radius, Field, OverRadius, ScalarField};
use crate::group::StratifiedGroup;
use crate::hcalc::{euclidean_gradient, DiffMode};
use crate::quad::{GridSpec, QuadratureGrid};

/// Relative tolerance for the equality-type hypotheses.
pub const HYPOTHESIS_TOL: f64 = 1e-12;

/// Absolute floor of the combined verdict tolerance.
pub const VERDICT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Sobolev,
    Hardy,
    Ckn,
    L2EquivA,
    L2EquivB,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

/// One hypothesis of a case and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
}

/// The pointwise quantity raised to a power inside a norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Value,
    /// `x' . grad_H f`
    Euler,
    /// `|grad_H f|`
    GradNorm,
}

/// `integral |Q|^power |x'|^rho_exp dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub quantity: Quantity,
    pub power: f64,
    pub rho_exp: f64,
}

impl Term {
    fn new(quantity: Quantity, power: f64, weight: f64) -> Self {
        // |Q|^power |x'|^(weight power) is the integrand of || |x'|^weight Q ||_power
        Self {
            quantity,
            power,
            rho_exp: weight * power,
        }
    }
}

/// A norm `(integral)^(1 / power)` raised to `exponent` in a product.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Factor {
    term: Term,
    exponent: f64,
}

#[derive(Debug, Clone)]
pub struct InequalityCase {
    pub kind: CaseKind,
    group: StratifiedGroup,
    pub params: CaseParams,
    /// Multiplier of the right-hand side; `None` for a trivial case.
    pub constant: Option<f64>,
    pub trivial: bool,
    pub sharpness_claimed: bool,
    pub hypotheses: Vec<Hypothesis>,
}

fn check_p(name: &str, p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::ConstraintViolated(format!(
            "{name} must exceed 1 and be finite, got {p}"
        )));
    }
    Ok(())
}

fn sobolev_like(
    kind: CaseKind,
    group: &StratifiedGroup,
    p: f64,
    alpha: f64,
) -> Result<InequalityCase> {
    check_p("p", p)?;
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite, got {alpha}"
        )));
    }
    let n = group.first_stratum_dim() as f64;
    let gap = (n - alpha * p).abs();
    let trivial = gap == 0.0;
    Ok(InequalityCase {
        kind,
        group: group.clone(),
        params: CaseParams {
            p,
            alpha: Some(alpha),
            ..CaseParams::default()
        },
        constant: (!trivial).then(|| p / gap),
        trivial,
        sharpness_claimed: !trivial,
        hypotheses: vec![
            Hypothesis {
                name: "1 < p < inf".into(),
                holds: true,
            },
            Hypothesis {
                name: "N != alpha p".into(),
                holds: !trivial,
            },
        ],
    })
}

/// `(|N - alpha p| / p) || f / |x'|^alpha ||_p <= || x' . grad_H f / |x'|^alpha ||_p`.
pub fn sobolev_case(group: &StratifiedGroup, p: f64, alpha: f64) -> Result<InequalityCase> {
    sobolev_like(CaseKind::Sobolev, group, p, alpha)
}

/// `(|N - alpha p| / p) || f / |x'|^alpha ||_p <= || grad_H f / |x'|^(alpha - 1) ||_p`.
pub fn hardy_case(group: &StratifiedGroup, p: f64, alpha: f64) -> Result<InequalityCase> {
    sobolev_like(CaseKind::Hardy, group, p, alpha)
}

fn l2_equiv(kind: CaseKind, group: &StratifiedGroup, alpha: f64) -> Result<InequalityCase> {
    if group.first_stratum_dim() < 3 {
        return Err(Error::ConstraintViolated(format!(
            "the L^2 equivalence needs N >= 3, group {} has N = {}",
            group.name(),
            group.first_stratum_dim()
        )));
    }
    let mut case = sobolev_like(kind, group, 2.0, alpha)?;
    case.hypotheses.push(Hypothesis {
        name: "N >= 3".into(),
        holds: true,
    });
    Ok(case)
}

/// `|| f ||_2 <= (2 / N) || x' . grad_H f ||_2`.
pub fn l2_equiv_a(group: &StratifiedGroup) -> Result<InequalityCase> {
    l2_equiv(CaseKind::L2EquivA, group, 0.0)
}

/// `|| g / |x'| ||_2 <= (2 / (N - 2)) || (x' / |x'|) . grad_H g ||_2`.
pub fn l2_equiv_b(group: &StratifiedGroup) -> Result<InequalityCase> {
    l2_equiv(CaseKind::L2EquivB, group, 1.0)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= HYPOTHESIS_TOL * a.abs().max(b.abs()).max(1.0)
}

/// `|| |x'|^c f ||_r <= |p / (N + p(a - 1))|^delta
///   || |x'|^a grad_H f ||_p^delta || |x'|^b f ||_q^(1 - delta)`
/// with `c = delta (a - 1) + b (1 - delta)`.
#[allow(clippy::too_many_arguments)]
pub fn ckn_case(
    group: &StratifiedGroup,
    p: f64,
    q: f64,
    r: f64,
    delta: f64,
    a: f64,
    b: f64,
) -> Result<InequalityCase> {
    let n = group.first_stratum_dim() as f64;
    let finite = [p, q, r, delta, a, b].iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidParameter(
            "CKN parameters must be finite".into(),
        ));
    }
    let lo = ((r - q) / r).max(0.0);
    let hi = (p / r).min(1.0);
    let checks = [
        ("1 < p < inf", p > 1.0),
        ("1 < q < inf", q > 1.0),
        ("0 < r < inf", r > 0.0),
        ("p + q >= r", p + q >= r * (1.0 - HYPOTHESIS_TOL)),
        (
            "delta in [0,1] and [(r-q)/r, p/r]",
            (0.0..=1.0).contains(&delta)
                && delta >= lo - HYPOTHESIS_TOL
                && delta <= hi + HYPOTHESIS_TOL,
        ),
        (
            "delta r / p + (1 - delta) r / q = 1",
            close(delta * r / p + (1.0 - delta) * r / q, 1.0),
        ),
        ("N != p(1 - a)", !close(n, p * (1.0 - a))),
    ];
    if let Some((name, _)) = checks.iter().find(|(_, ok)| !ok) {
        return Err(Error::ConstraintViolated(format!(
            "{name} (p={p}, q={q}, r={r}, delta={delta}, a={a}, b={b}, N={n})"
        )));
    }
    let c = delta * (a - 1.0) + b * (1.0 - delta);
    let constant = (p / (n + p * (a - 1.0))).abs().powf(delta);
    let sharpness_claimed = (p == q && close(a - b, 1.0))
        || (p != q && !close(p * (1.0 - a) + b * q, 0.0))
        || delta == 0.0
        || delta == 1.0;
    Ok(InequalityCase {
        kind: CaseKind::Ckn,
        group: group.clone(),
        params: CaseParams {
            p,
            q: Some(q),
            r: Some(r),
            delta: Some(delta),
            alpha: None,
            a: Some(a),
            b: Some(b),
            c: Some(c),
        },
        constant: Some(constant),
        trivial: false,
        sharpness_claimed,
        hypotheses: checks
            .iter()
            .map(|(name, holds)| Hypothesis {
                name: (*name).into(),
                holds: *holds,
            })
            .collect(),
    })
}

impl InequalityCase {
    pub fn group(&self) -> &StratifiedGroup {
        &self.group
    }

    /// Constant in front of the left-hand side as the inequality is usually
    /// written, e.g. `|N - alpha p| / p`.
    pub fn lhs_factor(&self) -> f64 {
        match self.constant {
            Some(k) => 1.0 / k,
            None => 0.0,
        }
    }

    fn lhs_term(&self) -> Term {
        let pr = &self.params;
        match self.kind {
            CaseKind::Ckn => Term::new(Quantity::Value, pr.r.unwrap(), pr.c.unwrap()),
            _ => Term::new(Quantity::Value, pr.p, -pr.alpha.unwrap()),
        }
    }

    fn rhs_factors(&self) -> Vec<Factor> {
        let pr = &self.params;
        let p = pr.p;
        match self.kind {
            CaseKind::Sobolev | CaseKind::L2EquivA | CaseKind::L2EquivB => vec![Factor {
                term: Term::new(Quantity::Euler, p, -pr.alpha.unwrap()),
                exponent: 1.0,
            }],
            CaseKind::Hardy => vec![Factor {
                term: Term::new(Quantity::GradNorm, p, 1.0 - pr.alpha.unwrap()),
                exponent: 1.0,
            }],
            CaseKind::Ckn => {
                let d = pr.delta.unwrap();
                vec![
                    Factor {
                        term: Term::new(Quantity::GradNorm, p, pr.a.unwrap()),
                        exponent: d,
                    },
                    Factor {
                        term: Term::new(Quantity::Value, pr.q.unwrap(), pr.b.unwrap()),
                        exponent: 1.0 - d,
                    },
                ]
            }
        }
    }

    /// Right side of the Hoelder step, `|| |x'|^(a-1) f ||_p^delta || |x'|^b f ||_q^(1-delta)`.
    fn interpolation_factors(&self) -> Option<Vec<Factor>> {
        let pr = &self.params;
        (self.kind == CaseKind::Ckn).then(|| {
            let d = pr.delta.unwrap();
            vec![
                Factor {
                    term: Term::new(Quantity::Value, pr.p, pr.a.unwrap() - 1.0),
                    exponent: d,
                },
                Factor {
                    term: Term::new(Quantity::Value, pr.q.unwrap(), pr.b.unwrap()),
                    exponent: 1.0 - d,
                },
            ]
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportErrors {
    pub lhs: f64,
    pub rhs: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub case: CaseKind,
    pub group: String,
    pub field: String,
    pub params: CaseParams,
    pub lhs: f64,
    /// Right-hand side including the constant.
    pub rhs: f64,
    pub constant: Option<f64>,
    pub ratio: f64,
    pub errors: ReportErrors,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpolation_ratio: Option<f64>,
    pub trivial: bool,
}

/// What the integrand callback sees at one quadrature node.
pub struct NodeSample<'a> {
    pub x: &'a [f64],
    pub rho: f64,
    pub value: f64,
    /// `(X_1 f, .., X_N f)`.
    pub hgrad: &'a [f64],
    pub euler: f64,
}

impl NodeSample<'_> {
    pub fn grad_norm(&self) -> f64 {
        self.hgrad.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Integrates `outputs` functionals of `(f, grad_H f)` over the field's
/// support, returning the values at the requested level and one level down.
pub fn integrate_field<F, G>(
    group: &StratifiedGroup,
    field: &F,
    spec: &GridSpec,
    outputs: usize,
    mut integrand: G,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: ScalarField,
    G: FnMut(&NodeSample, &mut [f64]),
{
    let fine = field_grid(group, field, spec)?;
    let f = sum_over(group, field, &fine, outputs, &mut integrand)?;
    let c = sum_over(group, field, &fine.coarsened(), outputs, &mut integrand)?;
    Ok((f, c))
}

/// As [`integrate_field`], at the requested level only.
pub fn integrate_field_once<F, G>(
    group: &StratifiedGroup,
    field: &F,
    spec: &GridSpec,
    outputs: usize,
    mut integrand: G,
) -> Result<Vec<f64>>
where
    F: ScalarField,
    G: FnMut(&NodeSample, &mut [f64]),
{
    let grid = field_grid(group, field, spec)?;
    sum_over(group, field, &grid, outputs, &mut integrand)
}

fn field_grid<F: ScalarField>(
    group: &StratifiedGroup,
    field: &F,
    spec: &GridSpec,
) -> Result<QuadratureGrid> {
    if field.dim() != group.dim() {
        return Err(Error::InvalidParameter(format!(
            "field lives in dimension {}, group {} in {}",
            field.dim(),
            group.name(),
            group.dim()
        )));
    }
    let support = field.support();
    if !(support.rho_min > 0.0) {
        return Err(Error::InadmissibleSupport(
            "support must stay away from {x' = 0}".into(),
        ));
    }
    QuadratureGrid::new(group, spec, support)
}

fn sum_over<F, G>(
    group: &StratifiedGroup,
    field: &F,
    grid: &QuadratureGrid,
    outputs: usize,
    integrand: &mut G,
) -> Result<Vec<f64>>
where
    F: ScalarField,
    G: FnMut(&NodeSample, &mut [f64]),
{
    let big_n = group.first_stratum_dim();
    let analytic = field.has_partials();
    let mut partials = vec![0.0; group.dim()];
    let mut hgrad = vec![0.0; big_n];
    grid.sum_nodes(outputs, |x, out| {
        let value = field.value(x);
        if analytic {
            field.partials(x, &mut partials);
        } else {
            partials.copy_from_slice(&euclidean_gradient(field, x, DiffMode::Fd)?);
        }
        if value == 0.0 && partials.iter().all(|d| *d == 0.0) {
            out.fill(0.0);
            return Ok(());
        }
        group.horizontal_from_partials(x, &partials, &mut hgrad);
        let euler = hgrad.iter().zip(x).map(|(g, xi)| g * xi).sum();
        let sample = NodeSample {
            x,
            rho: radius(big_n, x),
            value,
            hgrad: &hgrad,
            euler,
        };
        integrand(&sample, out);
        Ok(())
    })
}

#[inline]
fn power_term(ln_q: f64, ln_rho: f64, t: &Term) -> f64 {
    if ln_q == f64::NEG_INFINITY {
        0.0
    } else {
        (t.power * ln_q + t.rho_exp * ln_rho).exp()
    }
}

fn product(factors: &[Factor], norms: &[f64]) -> f64 {
    factors
        .iter()
        .zip(norms)
        .filter(|(f, _)| f.exponent != 0.0)
        .map(|(f, n)| n.powf(f.exponent))
        .product()
}

/// Evaluates every case on the same field in a single quadrature pass.
pub fn evaluate_many<F>(
    cases: &[InequalityCase],
    field: &F,
    spec: &GridSpec,
) -> Result<Vec<InequalityReport>>
where
    F: ScalarField,
{
    let Some(first) = cases.first() else {
        return Ok(Vec::new());
    };
    let group = first.group();
    if let Some(other) = cases.iter().find(|c| !c.group.same_structure(group)) {
        return Err(Error::InvalidParameter(format!(
            "cases mix groups {} and {}",
            group.name(),
            other.group.name()
        )));
    }
    struct Layout {
        lhs: usize,
        rhs: Vec<Factor>,
        rhs_at: usize,
        interp: Option<(Vec<Factor>, usize)>,
    }
    let mut terms: Vec<Term> = Vec::new();
    let layouts: Vec<Layout> = cases
        .iter()
        .map(|case| {
            let lhs = terms.len();
            terms.push(case.lhs_term());
            let rhs = case.rhs_factors();
            let rhs_at = terms.len();
            terms.extend(rhs.iter().map(|f| f.term));
            let interp = case.interpolation_factors().map(|fs| {
                let at = terms.len();
                terms.extend(fs.iter().map(|f| f.term));
                (fs, at)
            });
            Layout {
                lhs,
                rhs,
                rhs_at,
                interp,
            }
        })
        .collect();

    let (fine, coarse) = integrate_field(group, field, spec, terms.len(), |s, out| {
        let ln_rho = s.rho.ln();
        let ln_v = s.value.abs().ln();
        let ln_e = s.euler.abs().ln();
        let ln_g = s.grad_norm().ln();
        for (o, t) in out.iter_mut().zip(&terms) {
            let ln_q = match t.quantity {
                Quantity::Value => ln_v,
                Quantity::Euler => ln_e,
                Quantity::GradNorm => ln_g,
            };
            *o = power_term(ln_q, ln_rho, t);
        }
    })?;
    let norms = |ints: &[f64]| -> Vec<f64> {
        ints.iter()
            .zip(&terms)
            .map(|(i, t)| i.max(0.0).powf(1.0 / t.power))
            .collect()
    };
    let (nf, nc) = (norms(&fine), norms(&coarse));

    Ok(cases
        .iter()
        .zip(&layouts)
        .map(|(case, lay)| {
            let side = |n: &[f64]| {
                let lhs = n[lay.lhs];
                let rhs = product(&lay.rhs, &n[lay.rhs_at..lay.rhs_at + lay.rhs.len()]);
                (lhs, rhs)
            };
            let (lhs_f, rhs_f) = side(&nf);
            let (lhs_c, rhs_c) = side(&nc);
            let lhs_err = (lhs_f - lhs_c).abs();
            let rhs_err = (rhs_f - rhs_c).abs();
            let interpolation_ratio = lay.interp.as_ref().map(|(fs, at)| {
                let d = product(fs, &nf[*at..*at + fs.len()]);
                if lhs_f == 0.0 {
                    0.0
                } else {
                    lhs_f / d
                }
            });
            let (lhs, rhs, ratio, combined) = match case.constant {
                None => (0.0, rhs_f, 0.0, VERDICT_FLOOR),
                Some(k) => {
                    let rhs = k * rhs_f;
                    let ratio = if lhs_f == 0.0 { 0.0 } else { lhs_f / rhs };
                    (lhs_f, rhs, ratio, lhs_err + k * rhs_err + VERDICT_FLOOR)
                }
            };
            let verdict = if lhs <= rhs {
                Verdict::Holds
            } else if lhs - rhs <= combined {
                Verdict::Inconclusive
            } else {
                Verdict::Violated
            };
            InequalityReport {
                case: case.kind,
                group: case.group.name().to_string(),
                field: field.label().to_string(),
                params: case.params.clone(),
                lhs,
                rhs,
                constant: case.constant,
                ratio,
                errors: ReportErrors {
                    lhs: lhs_err,
                    rhs: rhs_err,
                    combined,
                },
                verdict,
                interpolation_ratio,
                trivial: case.trivial,
            }
        })
        .collect())
}

pub fn evaluate<F>(case: &InequalityCase, field: &F, spec: &GridSpec) -> Result<InequalityReport>
where
    F: ScalarField,
{
    Ok(evaluate_many(std::slice::from_ref(case), field, spec)?.remove(0))
}

/// One condition of the classical Euclidean CKN theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub value: f64,
    pub applicable: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub delta: f64,
    pub c: f64,
    pub conditions: Vec<Condition>,
    pub failed: Vec<String>,
    pub all_hold: bool,
}

/// Conditions of the classical CKN theorem on `R^n` for the given exponents,
/// with `c = delta d + (1 - delta) b`. Inapplicable conditions count as held.
#[allow(clippy::too_many_arguments)]
pub fn classical_ckn_conditions(
    n: usize,
    p: f64,
    q: f64,
    r: f64,
    a: f64,
    b: f64,
    d: f64,
    delta: f64,
) -> Result<ConditionReport> {
    if !(p >= 1.0 && q >= 1.0 && r > 0.0 && (0.0..=1.0).contains(&delta) && n >= 1) {
        return Err(Error::InvalidParameter(format!(
            "need n >= 1, p, q >= 1, r > 0 and 0 <= delta <= 1, got n={n}, p={p}, q={q}, r={r}, delta={delta}"
        )));
    }
    let nf = n as f64;
    let c = delta * d + (1.0 - delta) * b;
    let pa = 1.0 / p + a / nf;
    let qb = 1.0 / q + b / nf;
    let rc = 1.0 / r + c / nf;
    let grad_side = 1.0 / p + (a - 1.0) / nf;
    let balance = rc - (delta * grad_side + (1.0 - delta) * qb);
    let positive = |v: f64| v > HYPOTHESIS_TOL;
    let critical = (rc - grad_side).abs() <= HYPOTHESIS_TOL;
    let conditions = vec![
        Condition {
            name: "1/p + a/n > 0".into(),
            value: pa,
            applicable: true,
            holds: positive(pa),
        },
        Condition {
            name: "1/q + b/n > 0".into(),
            value: qb,
            applicable: true,
            holds: positive(qb),
        },
        Condition {
            name: "1/r + c/n > 0".into(),
            value: rc,
            applicable: true,
            holds: positive(rc),
        },
        Condition {
            name: "1/r + c/n = delta (1/p + (a-1)/n) + (1-delta)(1/q + b/n)".into(),
            value: balance,
            applicable: true,
            holds: balance.abs() <= HYPOTHESIS_TOL,
        },
        Condition {
            name: "a - d >= 0 if delta > 0".into(),
            value: a - d,
            applicable: delta > 0.0,
            holds: delta == 0.0 || a - d >= -HYPOTHESIS_TOL,
        },
        Condition {
            name: "a - d <= 1 if delta > 0 and 1/r + c/n = 1/p + (a-1)/n".into(),
            value: a - d,
            applicable: delta > 0.0 && critical,
            holds: !(delta > 0.0 && critical) || a - d <= 1.0 + HYPOTHESIS_TOL,
        },
    ];
    let failed: Vec<String> = conditions
        .iter()
        .filter(|c| !c.holds)
        .map(|c| c.name.clone())
        .collect();
    Ok(ConditionReport {
        n,
        p,
        q,
        r,
        a,
        b,
        d,
        delta,
        c,
        all_hold: failed.is_empty(),
        failed,
        conditions,
    })
}

/// Relative mismatch of two quantities that should agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_mismatch: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        Self {
            lhs,
            rhs,
            rel_mismatch: if scale == 0.0 {
                0.0
            } else {
                (lhs - rhs).abs() / scale
            },
        }
    }
}

/// Termwise expansion of `|| x' . grad_H f ||^2` for `f = g / |x'|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub euler_f_sq: f64,
    pub g_over_rho_sq: f64,
    pub radial_g_sq: f64,
    pub sum_of_terms: f64,
    pub rel_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub group: String,
    pub field: String,
    pub statement_a: InequalityReport,
    pub statement_b: InequalityReport,
    /// `-2 int (g/|x'|)(x'/|x'|) . grad_H g = (N - 2) int g^2 / |x'|^2`.
    pub bridge: IdentityCheck,
    /// `2 int f (x' . grad_H f) = -N int f^2`.
    pub converse: IdentityCheck,
    pub expansion: Expansion,
}

impl EquivalenceReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.statement_a.verdict == Verdict::Holds
            && self.statement_b.verdict == Verdict::Holds
            && self.bridge.rel_mismatch <= tol
            && self.expansion.rel_mismatch <= tol
    }
}

/// Evaluates both L^2 statements on `g` and the identities linking them.
pub fn equivalence_check<F>(
    group: &StratifiedGroup,
    g: &F,
    spec: &GridSpec,
) -> Result<EquivalenceReport>
where
    F: ScalarField + Field,
{
    let cases = [l2_equiv_a(group)?, l2_equiv_b(group)?];
    let mut reports = evaluate_many(&cases, g, spec)?;
    let statement_b = reports.pop().unwrap();
    let statement_a = reports.pop().unwrap();
    let n = group.first_stratum_dim() as f64;

    // x' . grad_H (g / |x'|) from the partials of the quotient field
    let f = OverRadius::new(group, g);
    let mut df = vec![0.0; group.dim()];
    let mut hf = vec![0.0; group.first_stratum_dim()];
    let ints = integrate_field_once(group, g, spec, 6, |s, out| {
        let inv2 = 1.0 / (s.rho * s.rho);
        out[0] = s.value * s.euler * inv2;
        out[1] = s.value * s.value * inv2;
        out[2] = s.value * s.euler;
        out[3] = s.value * s.value;
        out[4] = s.euler * s.euler * inv2;
        f.partials(s.x, &mut df);
        group.horizontal_from_partials(s.x, &df, &mut hf);
        let ef: f64 = hf.iter().zip(s.x).map(|(a, b)| a * b).sum();
        out[5] = ef * ef;
    })?;
    let bridge = IdentityCheck::new(-2.0 * ints[0], (n - 2.0) * ints[1]);
    let converse = IdentityCheck::new(2.0 * ints[2], -n * ints[3]);
    let ef = [ints[5]];
    let sum = ints[1] + (n - 2.0) * ints[1] + ints[4];
    let expansion = Expansion {
        euler_f_sq: ef[0],
        g_over_rho_sq: ints[1],
        radial_g_sq: ints[4],
        sum_of_terms: sum,
        rel_mismatch: IdentityCheck::new(ef[0], sum).rel_mismatch,
    };
    Ok(EquivalenceReport {
        group: group.name().to_string(),
        field: g.label().to_string(),
        statement_a,
        statement_b,
        bridge,
        converse,
        expansion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfuncs::random_field;
    use approx::assert_abs_diff_eq;

    fn r3() -> StratifiedGroup {
        StratifiedGroup::euclidean(3).unwrap()
    }

    #[test]
    fn sobolev_constants() {
        let c = sobolev_case(&r3(), 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(c.lhs_factor(), 1.5, epsilon = 1e-15);
        let h1 = StratifiedGroup::heisenberg(1).unwrap();
        assert_abs_diff_eq!(
            sobolev_case(&h1, 2.0, 0.0).unwrap().lhs_factor(),
            1.0,
            epsilon = 1e-15
        );
        let r2 = StratifiedGroup::euclidean(2).unwrap();
        let t = sobolev_case(&r2, 2.0, 1.0).unwrap();
        assert!(t.trivial && t.constant.is_none() && !t.sharpness_claimed);
    }

    #[test]
    fn hardy_constants() {
        assert_abs_diff_eq!(
            hardy_case(&r3(), 2.0, 1.0).unwrap().constant.unwrap(),
            2.0,
            epsilon = 1e-15
        );
        let h1 = StratifiedGroup::heisenberg(1).unwrap();
        assert_abs_diff_eq!(
            hardy_case(&h1, 3.0, 0.0).unwrap().lhs_factor(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn p_at_most_one_is_rejected() {
        let err = hardy_case(&r3(), 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("p must exceed 1"));
    }

    #[test]
    fn ckn_hypotheses() {
        let g = r3();
        let c = ckn_case(&g, 2.0, 2.0, 2.0, 0.5, 0.5, -1.5).unwrap();
        assert_abs_diff_eq!(c.constant.unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.params.c.unwrap(), -1.0, epsilon = 1e-15);
        let d0 = ckn_case(&g, 2.0, 3.0, 3.0, 0.0, 0.3, 0.7).unwrap();
        assert_eq!(d0.constant, Some(1.0));
        assert_eq!(d0.params.c, Some(0.7));
        assert!(d0.sharpness_claimed);
        let err = ckn_case(&g, 2.0, 2.0, 3.0, 0.5, 0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("delta r / p"), "{err}");
        let err = ckn_case(&g, 2.0, 2.0, 2.0, 0.5, -0.5, 0.0).unwrap_err();
        assert!(err.to_string().contains("N != p(1 - a)"), "{err}");
    }

    #[test]
    fn example_conditions_fail_only_positivity_of_q_term() {
        let rep = classical_ckn_conditions(3, 2.0, 2.0, 2.0, 0.5, -1.5, -0.5, 0.5).unwrap();
        assert_eq!(rep.failed, vec!["1/q + b/n > 0".to_string()]);
        let triv = classical_ckn_conditions(3, 2.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!(triv.all_hold);
    }

    #[test]
    fn balance_matches_ckn_c_for_delta_one() {
        // d = a - 1 gives c = a - 1, the case's own c
        let a = 0.3;
        let rep = classical_ckn_conditions(3, 2.0, 2.0, 2.0, a, 0.0, a - 1.0, 1.0).unwrap();
        let case = ckn_case(&r3(), 2.0, 2.0, 2.0, 1.0, a, 0.0).unwrap();
        assert_abs_diff_eq!(rep.c, case.params.c.unwrap(), epsilon = 1e-15);
        assert!(rep.conditions[3].holds);
    }

    #[test]
    fn random_field_satisfies_sobolev_and_hardy() {
        let g = StratifiedGroup::heisenberg(1).unwrap();
        let f = random_field(&g, 3, 3).unwrap();
        let spec = GridSpec::default();
        let cases = [
            sobolev_case(&g, 2.0, 0.0).unwrap(),
            hardy_case(&g, 2.0, 0.0).unwrap(),
        ];
        let reps = evaluate_many(&cases, &f, &spec).unwrap();
        for r in &reps {
            assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
            assert!(r.ratio > 0.0 && r.ratio < 1.0);
        }
        assert!(reps[1].rhs >= reps[0].rhs);
    }

    #[test]
    fn zero_field_holds_trivially() {
        let g = r3();
        let zero = crate::field::FnField::new(3, "zero", |_| 0.0)
            .with_partials(|_, out| out.fill(0.0))
            .with_support(crate::field::Support::annulus(0.5, 2.0, &[]).unwrap());
        let rep = evaluate(
            &sobolev_case(&g, 2.0, 0.0).unwrap(),
            &zero,
            &GridSpec::default(),
        )
        .unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.ratio), (0.0, 0.0, 0.0));
        assert_eq!(rep.verdict, Verdict::Holds);
    }

    #[test]
    fn equivalence_needs_three_dimensional_first_stratum() {
        let g = StratifiedGroup::heisenberg(1).unwrap();
        let f = random_field(&g, 1, 2).unwrap();
        assert!(equivalence_check(&g, &f, &GridSpec::default()).is_err());
    }
}
