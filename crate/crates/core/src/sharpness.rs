//! Numerical sharpness studies: ratio curves along extremizer schedules and
//! best-constant estimates over radial profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::StratifiedGroup;
use crate::ineq::{evaluate, CaseKind, InequalityCase, InequalityReport};
use crate::quad::GridSpec;
use crate::simplex::{minimize, SimplexOptions};
use crate::spline::NaturalSpline;
use crate::testfuncs::{
    h2_exponent, ExtremizerFamily, FamilyKind, Plateau, ProfileField, RadialProfile,
};

/// One point of an extremizer schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleStep {
    pub eps: f64,
    pub r: f64,
    pub r_prime: f64,
}

/// `eps` in `{1e-1, 1e-2, 1e-3}` with `R = 1/eps` and `R' = 10/eps`.
pub fn standard_schedule() -> Vec<ScheduleStep> {
    [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&eps| ScheduleStep {
            eps,
            r: 1.0 / eps,
            r_prime: 10.0 / eps,
        })
        .collect()
}

fn check_schedule(schedule: &[ScheduleStep]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("schedule must not be empty".into()));
    }
    let ordered = schedule
        .windows(2)
        .all(|w| w[1].eps < w[0].eps && w[1].r > w[0].r && w[1].r_prime > w[0].r_prime);
    if !ordered {
        return Err(Error::InvalidParameter(
            "schedule must have eps decreasing and R, R' increasing".into(),
        ));
    }
    Ok(())
}

/// Power exponent that makes both sides of the case scale identically.
pub fn critical_exponent(case: &InequalityCase) -> f64 {
    let n = case.group().first_stratum_dim() as f64;
    let pr = &case.params;
    match case.kind {
        CaseKind::Ckn => -(n + pr.p * (pr.a.unwrap() - 1.0)) / pr.p,
        _ => -(n - pr.alpha.unwrap() * pr.p) / pr.p,
    }
}

/// The extremizer family suited to a case, with placeholder radii.
pub fn default_family(case: &InequalityCase) -> Result<ExtremizerFamily> {
    let pr = &case.params;
    let n = case.group().first_stratum_dim() as f64;
    let (kind, beta) = match case.kind {
        CaseKind::Ckn => {
            let (q, d) = (pr.q.unwrap(), pr.delta.unwrap());
            if pr.p == q || d == 0.0 || d == 1.0 {
                (FamilyKind::H3, critical_exponent(case))
            } else {
                (
                    FamilyKind::H2,
                    h2_exponent(pr.p, q, pr.a.unwrap(), pr.b.unwrap())?,
                )
            }
        }
        _ => {
            if case.trivial {
                return Err(Error::InvalidParameter(
                    "trivial case has no extremizer".into(),
                ));
            }
            if n > pr.alpha.unwrap() * pr.p {
                (FamilyKind::H1, -(n - pr.alpha.unwrap() * pr.p).abs() / pr.p)
            } else {
                (FamilyKind::H3, critical_exponent(case))
            }
        }
    };
    if beta == 0.0 && kind == FamilyKind::H3 {
        return ExtremizerFamily::new(
            FamilyKind::Bump,
            0.0,
            0.1,
            10.0,
            100.0,
        );
    }
    ExtremizerFamily::new(kind, beta, 0.1, 10.0, 100.0)
}

fn grid_for(group: &StratifiedGroup, spec: &GridSpec) -> GridSpec {
    let mut spec = spec.clone();
    if group.step() == 1 {
        spec.radial_fast_path = true;
    }
    spec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    pub case: CaseKind,
    pub family: ExtremizerFamily,
    pub schedule: Vec<ScheduleStep>,
    pub ratios: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub interpolation_ratios: Vec<f64>,
    pub reports: Vec<InequalityReport>,
}

impl RatioCurve {
    pub fn final_ratio(&self) -> f64 {
        *self.ratios.last().unwrap()
    }

    pub fn is_increasing(&self, tol: f64) -> bool {
        self.ratios.windows(2).all(|w| w[1] > w[0] - tol)
    }

    /// CSV with columns `eps,R,R_prime,ratio[,interpolation_ratio]`.
    pub fn to_csv(&self) -> String {
        let interp = !self.interpolation_ratios.is_empty();
        let mut out = String::from("eps,R,R_prime,ratio");
        if interp {
            out.push_str(",interpolation_ratio");
        }
        out.push('\n');
        for (i, s) in self.schedule.iter().enumerate() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:.15e}",
                s.eps, s.r, s.r_prime, self.ratios[i]
            ));
            if interp {
                out.push_str(&format!(",{:.15e}", self.interpolation_ratios[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates the case on the family's mollified extremizers along `schedule`.
pub fn ratio_curve(
    case: &InequalityCase,
    family: &ExtremizerFamily,
    schedule: &[ScheduleStep],
    spec: &GridSpec,
) -> Result<RatioCurve> {
    if !case.sharpness_claimed {
        return Err(Error::InvalidParameter(format!(
            "no sharpness is claimed for this {:?} case",
            case.kind
        )));
    }
    check_schedule(schedule)?;
    let group = case.group();
    let spec = grid_for(group, spec);
    let mut reports = Vec::with_capacity(schedule.len());
    for step in schedule {
        let field = family.at(step.eps, step.r, step.r_prime)?.build(group)?;
        reports.push(evaluate(case, &field, &spec)?);
    }
    Ok(RatioCurve {
        case: case.kind,
        family: family.clone(),
        schedule: schedule.to_vec(),
        ratios: reports.iter().map(|r| r.ratio).collect(),
        interpolation_ratios: reports
            .iter()
            .filter_map(|r| r.interpolation_ratio)
            .collect(),
        reports,
    })
}

/// `rho^beta S(ln rho)` with `S` a natural spline vanishing at both ends.
#[derive(Debug, Clone)]
pub struct SplineProfile {
    beta: f64,
    spline: NaturalSpline,
    breaks: Vec<f64>,
}

impl SplineProfile {
    /// `rho_knots` includes both end knots; `values` are the interior ones.
    pub fn new(beta: f64, rho_knots: &[f64], values: &[f64]) -> Result<Self> {
        if rho_knots.len() != values.len() + 2 {
            return Err(Error::InvalidParameter(
                "need two more knots than values".into(),
            ));
        }
        let mut y = Vec::with_capacity(rho_knots.len());
        y.push(0.0);
        y.extend_from_slice(values);
        y.push(0.0);
        let u: Vec<f64> = rho_knots.iter().map(|r| r.ln()).collect();
        Ok(Self {
            beta,
            spline: NaturalSpline::new(u, y)?,
            breaks: rho_knots.to_vec(),
        })
    }
}

impl RadialProfile for SplineProfile {
    fn eval(&self, rho: f64) -> (f64, f64) {
        if rho <= self.breaks[0] || rho >= *self.breaks.last().unwrap() {
            return (0.0, 0.0);
        }
        let (s, ds) = self.spline.eval(rho.ln());
        let pw = rho.powf(self.beta);
        (pw * s, pw / rho * (self.beta * s + ds))
    }

    fn breaks(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BestConstantOptions {
    pub dof: usize,
    pub budget: usize,
    pub seed: u64,
    pub restarts: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Interior knot values of `S`; `None` starts from the flat extremizer
    /// shape with a seeded perturbation.
    pub initial: Option<Vec<f64>>,
    pub grid: GridSpec,
}

impl Default for BestConstantOptions {
    fn default() -> Self {
        Self {
            dof: 16,
            budget: 2000,
            seed: 0,
            restarts: 3,
            rho_min: 1e-6,
            rho_max: 1e6,
            initial: None,
            grid: GridSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEstimate {
    pub dof: usize,
    /// Knot radii, end knots included.
    pub knots: Vec<f64>,
    /// Profile values `P(rho_i)` at the interior knots.
    pub values: Vec<f64>,
    pub beta: f64,
    pub ratio: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best ratio so far after each simplex iteration.
    pub history: Vec<f64>,
}

impl ProfileEstimate {
    /// CSV with columns `iteration,best_ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,best_ratio\n");
        for (i, r) in self.history.iter().enumerate() {
            out.push_str(&format!("{i},{r:.15e}\n"));
        }
        out
    }
}

/// Maximises the case's ratio over radial profiles `rho^beta S(ln rho)`,
/// where `beta` is the critical exponent and `S` interpolates positive knot
/// values on log-spaced knots.
pub fn estimate_best_constant(
    case: &InequalityCase,
    opts: &BestConstantOptions,
) -> Result<ProfileEstimate> {
    if opts.dof < 4 {
        return Err(Error::InvalidParameter(format!(
            "dof must be at least 4, got {}",
            opts.dof
        )));
    }
    if !(opts.rho_min > 0.0 && opts.rho_max > opts.rho_min) {
        return Err(Error::InvalidParameter("need 0 < rho_min < rho_max".into()));
    }
    if case.trivial {
        return Err(Error::InvalidParameter(
            "trivial case has no best constant".into(),
        ));
    }
    let group = case.group().clone();
    let beta = critical_exponent(case);
    let (u0, u1) = (opts.rho_min.ln(), opts.rho_max.ln());
    let knots: Vec<f64> = (0..opts.dof + 2)
        .map(|i| (u0 + (u1 - u0) * i as f64 / (opts.dof + 1) as f64).exp())
        .collect();
    let big_r = opts.rho_max * opts.rho_max * 10.0;
    let plateau = Plateau::new(big_r, 2.0 * big_r)?;
    let spec = grid_for(&group, &opts.grid);

    let start: Vec<f64> = match &opts.initial {
        Some(v) => {
            if v.len() != opts.dof {
                return Err(Error::InvalidParameter(format!(
                    "initial profile has {} values, dof is {}",
                    v.len(),
                    opts.dof
                )));
            }
            if v.iter().all(|y| *y == 0.0) {
                return Err(Error::DegenerateProfile(
                    "initial profile is identically zero".into(),
                ));
            }
            if v.iter().any(|y| !(*y > 0.0)) {
                return Err(Error::DegenerateProfile(
                    "initial knot values must be positive (optimised in log)".into(),
                ));
            }
            v.iter().map(|y| y.ln()).collect()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..opts.dof).map(|_| rng.gen_range(-0.1..0.1)).collect()
        }
    };

    let build = |z: &[f64]| -> Result<ProfileField<SplineProfile>> {
        let values: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        ProfileField::new(
            &group,
            SplineProfile::new(beta, &knots, &values)?,
            plateau,
            "spline profile",
        )
    };
    let ratio_of = |z: &[f64]| -> Result<f64> {
        let field = build(z)?;
        let rep = evaluate(case, &field, &spec)?;
        if rep.lhs == 0.0 && rep.rhs == 0.0 {
            return Err(Error::DegenerateProfile("profile evaluates to 0/0".into()));
        }
        Ok(rep.ratio)
    };

    let first = ratio_of(&start)?;
    let mut best = (start, first);
    let mut history = vec![first];
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut converged = false;
    let mut failure: Option<Error> = None;
    let restarts = opts.restarts.max(1);
    for k in 0..restarts {
        let remaining = opts.budget.saturating_sub(evaluations);
        if remaining <= opts.dof + 1 {
            break;
        }
        let share = remaining / (restarts - k);
        let res = minimize(
            |z| match ratio_of(z) {
                Ok(r) => -r,
                Err(e) => {
                    if failure.is_none() && e.is_numerical() {
                        failure = Some(e);
                    }
                    f64::INFINITY
                }
            },
            &best.0,
            SimplexOptions {
                max_evaluations: share,
                f_tol: 1e-10,
                step: 0.5 / (1 << k) as f64,
            },
        );
        evaluations += res.evaluations;
        iterations += res.iterations;
        let current = best.1;
        history.extend(res.history.iter().map(|v| (-v).max(current)));
        if -res.value > best.1 {
            best = (res.x, -res.value);
        }
        converged = res.converged;
    }
    if let Some(e) = failure {
        log::warn!("some profile evaluations failed: {e}");
    }
    let mut running = f64::NEG_INFINITY;
    for h in history.iter_mut() {
        running = running.max(*h);
        *h = running;
    }
    let values = best
        .0
        .iter()
        .zip(&knots[1..])
        .map(|(z, rho)| z.exp() * rho.powf(beta))
        .collect();
    Ok(ProfileEstimate {
        dof: opts.dof,
        knots,
        values,
        beta,
        ratio: best.1,
        evaluations,
        iterations,
        converged,
        history,
    })
}
