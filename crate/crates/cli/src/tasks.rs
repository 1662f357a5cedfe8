use serde_json::{json, Value};
use stratlab::hcalc::sample_points;
use stratlab::sharpness::default_family;
use stratlab::{
    check_divergence_identity, check_gradient_identity, ckn_case, classical_ckn_conditions,
    equivalence_check, estimate_best_constant, evaluate_many, hardy_case, l2_equiv_a, l2_equiv_b,
    random_field, ratio_curve, sobolev_case, standard_schedule, CaseKind, DiffMode, InequalityCase,
    StratifiedGroup, Verdict,
};

use crate::config::RunConfig;
use crate::CliError;

/// Result of a task: the report body, whether everything held, and an
/// optional CSV table.
pub struct Outcome {
    pub result: Value,
    pub status: Status,
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Inconclusive,
    Violated,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Inconclusive => "inconclusive",
            Status::Violated => "violated",
        }
    }

    fn from_verdicts(verdicts: impl IntoIterator<Item = Verdict>) -> Self {
        let mut status = Status::Ok;
        for v in verdicts {
            match v {
                Verdict::Violated => return Status::Violated,
                Verdict::Inconclusive => status = Status::Inconclusive,
                Verdict::Holds => {}
            }
        }
        status
    }
}

fn ok(result: Value) -> Outcome {
    Outcome {
        result,
        status: Status::Ok,
        csv: None,
    }
}

pub fn build_case(cfg: &RunConfig, g: &StratifiedGroup) -> Result<InequalityCase, CliError> {
    let kind = cfg
        .kind
        .ok_or_else(|| CliError::Config("missing parameter kind".into()))?;
    let case = match kind {
        CaseKind::Sobolev => sobolev_case(g, cfg.need("p", cfg.p)?, cfg.alpha.unwrap_or(0.0))?,
        CaseKind::Hardy => hardy_case(g, cfg.need("p", cfg.p)?, cfg.alpha.unwrap_or(0.0))?,
        CaseKind::Ckn => ckn_case(
            g,
            cfg.need("p", cfg.p)?,
            cfg.need("q", cfg.q)?,
            cfg.need("r", cfg.r)?,
            cfg.need("delta", cfg.delta)?,
            cfg.need("a", cfg.a)?,
            cfg.need("b", cfg.b)?,
        )?,
        CaseKind::L2EquivA => l2_equiv_a(g)?,
        CaseKind::L2EquivB => l2_equiv_b(g)?,
    };
    Ok(case)
}

fn case_summary(case: &InequalityCase) -> Value {
    json!({
        "kind": case.kind,
        "params": case.params,
        "constant": case.constant,
        "trivial": case.trivial,
        "sharpness_claimed": case.sharpness_claimed,
        "hypotheses": case.hypotheses,
    })
}

pub fn validate_group(g: &StratifiedGroup) -> Result<Outcome, CliError> {
    Ok(ok(json!({
        "name": g.name(),
        "strata": g.strata(),
        "dim": g.dim(),
        "step": g.step(),
        "homogeneous_dimension": g.homogeneous_dimension(),
        "description": g.description(),
    })))
}

pub fn check_identities(cfg: &RunConfig, g: &StratifiedGroup) -> Result<Outcome, CliError> {
    let n = g.first_stratum_dim() as f64;
    let gammas = cfg
        .identities
        .gammas
        .clone()
        .unwrap_or_else(|| vec![-1.0, 0.0, 1.0, 2.0, n]);
    let pts = sample_points(g, cfg.identities.points, cfg.seed);
    let mut reports = Vec::new();
    let mut all_pass = true;
    for &gamma in &gammas {
        for (mode, tol) in [
            (DiffMode::Analytic, cfg.identities.analytic_tol),
            (DiffMode::Fd, cfg.identities.fd_tol),
        ] {
            for rep in [
                check_gradient_identity(g, gamma, &pts, mode)?,
                check_divergence_identity(g, gamma, &pts, mode)?,
            ] {
                let pass = rep.passes(tol);
                all_pass &= pass;
                let mut v = serde_json::to_value(&rep)?;
                v["tolerance"] = json!(tol);
                v["pass"] = json!(pass);
                reports.push(v);
            }
        }
    }
    Ok(Outcome {
        result: json!({ "reports": reports, "all_pass": all_pass }),
        status: if all_pass {
            Status::Ok
        } else {
            Status::Violated
        },
        csv: None,
    })
}

pub fn check_inequality(cfg: &RunConfig, g: &StratifiedGroup) -> Result<Outcome, CliError> {
    let case = build_case(cfg, g)?;
    let mut reports = Vec::new();
    for seed in cfg.seed..cfg.seed + cfg.fields {
        let f = random_field(g, seed, cfg.bumps)?;
        reports.extend(evaluate_many(std::slice::from_ref(&case), &f, &cfg.grid)?);
    }
    let status = Status::from_verdicts(reports.iter().map(|r| r.verdict));
    let max_ratio = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(Outcome {
        result: json!({ "case": case_summary(&case), "max_ratio": max_ratio, "reports": reports }),
        status,
        csv: None,
    })
}

pub fn check_equivalence(cfg: &RunConfig, g: &StratifiedGroup) -> Result<Outcome, CliError> {
    let mut reports = Vec::new();
    let mut all_pass = true;
    for seed in cfg.seed..cfg.seed + cfg.fields {
        let f = random_field(g, seed, cfg.bumps)?;
        let rep = equivalence_check(g, &f, &cfg.grid)?;
        all_pass &= rep.passes(1e-6);
        reports.push(rep);
    }
    Ok(Outcome {
        result: json!({ "reports": reports, "all_pass": all_pass }),
        status: if all_pass {
            Status::Ok
        } else {
            Status::Violated
        },
        csv: None,
    })
}

pub fn sharpness(cfg: &RunConfig, g: &StratifiedGroup) -> Result<Outcome, CliError> {
    let case = build_case(cfg, g)?;
    let family = match &cfg.family {
        Some(f) => f.clone(),
        None => default_family(&case)?,
    };
    let schedule = cfg.schedule.clone().unwrap_or_else(standard_schedule);
    let curve = ratio_curve(&case, &family, &schedule, &cfg.grid)?;
    let status = Status::from_verdicts(curve.reports.iter().map(|r| r.verdict));
    Ok(Outcome {
        csv: Some(curve.to_csv()),
        result: json!({
            "case": case_summary(&case),
            "final_ratio": curve.final_ratio(),
            "increasing": curve.is_increasing(0.0),
            "curve": curve,
        }),
        status,
    })
}

pub fn best_constant(cfg: &RunConfig, g: &StratifiedGroup) -> Result<Outcome, CliError> {
    let case = build_case(cfg, g)?;
    let est = estimate_best_constant(&case, &cfg.best_constant)?;
    Ok(Outcome {
        csv: Some(est.to_csv()),
        result: json!({ "case": case_summary(&case), "estimate": est }),
        status: if est.ratio <= 1.0 {
            Status::Ok
        } else {
            Status::Violated
        },
    })
}

pub fn classical_conditions(cfg: &RunConfig, g: &StratifiedGroup) -> Result<Outcome, CliError> {
    let n = cfg.n.unwrap_or_else(|| g.first_stratum_dim());
    let a = cfg.need("a", cfg.a)?;
    let rep = classical_ckn_conditions(
        n,
        cfg.need("p", cfg.p)?,
        cfg.need("q", cfg.q)?,
        cfg.need("r", cfg.r)?,
        a,
        cfg.need("b", cfg.b)?,
        cfg.d.unwrap_or(a - 1.0),
        cfg.need("delta", cfg.delta)?,
    )?;
    Ok(ok(serde_json::to_value(&rep)?))
}
