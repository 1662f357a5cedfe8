mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use stratlab::CaseKind;

use config::RunConfig;
use tasks::{Outcome, Status};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(stratlab::Error),
    Io(String),
}

impl From<stratlab::Error> for CliError {
    fn from(e: stratlab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) if e.is_numerical() => "numerical",
            CliError::Core(_) => "parameters",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "stratlab",
    version,
    about = "Weighted Hardy, Sobolev and CKN inequality checks on stratified groups"
)]
struct Cli {
    #[command(subcommand)]
    task: Task,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Task {
    /// Build a group and print its structure.
    ValidateGroup,
    /// Check the gradient and divergence identities of |x'|^gamma.
    CheckIdentities,
    /// Evaluate an inequality on seeded random fields.
    CheckInequality,
    /// Check both L^2 statements and the identities linking them.
    CheckEquivalence,
    /// Ratio curve along a mollified extremizer schedule.
    Sharpness,
    /// Maximize the ratio over spline profiles.
    BestConstant,
    /// Classical Euclidean CKN conditions for a parameter set.
    ClassicalConditions,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::ValidateGroup => "validate-group",
            Task::CheckIdentities => "check-identities",
            Task::CheckInequality => "check-inequality",
            Task::CheckEquivalence => "check-equivalence",
            Task::Sharpness => "sharpness",
            Task::BestConstant => "best-constant",
            Task::ClassicalConditions => "classical-conditions",
        }
    }
}

fn parse_kind(s: &str) -> Result<CaseKind, String> {
    serde_json::from_value(json!(s))
        .map_err(|_| format!("unknown kind {s:?} (sobolev, hardy, ckn, l2_equiv_a, l2_equiv_b)"))
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    group: Option<String>,
    #[arg(long, global = true, value_parser = parse_kind)]
    kind: Option<CaseKind>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    d: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of random fields.
    #[arg(long, global = true)]
    fields: Option<u64>,
    /// Quadrature refinement level.
    #[arg(long, global = true)]
    level: Option<u32>,
    #[arg(long, global = true)]
    dof: Option<usize>,
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Write the curve or optimizer history as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f.clone() { cfg.$f = Some(v); } )* };
        }
        set!(kind, p, q, r, delta, alpha, a, b, n, d, output, csv);
        if let Some(g) = &self.group {
            cfg.group = g.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.best_constant.seed = s;
        }
        if let Some(f) = self.fields {
            cfg.fields = f;
        }
        if let Some(l) = self.level {
            cfg.grid.level = l;
        }
        if let Some(d) = self.dof {
            cfg.best_constant.dof = d;
        }
        if let Some(b) = self.budget {
            cfg.best_constant.budget = b;
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(task: Task, cfg: &RunConfig) -> Result<u8, CliError> {
    let (group, custom) = cfg.resolve_group()?;
    log::info!("{} on {}", task.name(), group.name());
    let Outcome {
        result,
        status,
        csv,
    } = match task {
        Task::ValidateGroup => tasks::validate_group(&group)?,
        Task::CheckIdentities => tasks::check_identities(cfg, &group)?,
        Task::CheckInequality => tasks::check_inequality(cfg, &group)?,
        Task::CheckEquivalence => tasks::check_equivalence(cfg, &group)?,
        Task::Sharpness => tasks::sharpness(cfg, &group)?,
        Task::BestConstant => tasks::best_constant(cfg, &group)?,
        Task::ClassicalConditions => tasks::classical_conditions(cfg, &group)?,
    };
    let mut report = json!({
        "schema": 1,
        "task": task.name(),
        "status": status.as_str(),
        "config": cfg,
        "result": result,
    });
    if let Some(desc) = custom {
        report["group_description"] = serde_json::to_value(desc)?;
    }
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let (Some(path), Some(csv)) = (&cfg.csv, csv) {
        std::fs::write(path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(match status {
        Status::Ok | Status::Inconclusive => 0,
        Status::Violated => 1,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match resolve(&cli).and_then(|cfg| run(cli.task, &cfg)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let diag = json!({
                "schema": 1,
                "task": cli.task.name(),
                "error": { "kind": e.kind(), "exit_code": e.exit_code(), "message": e.message() },
            });
            eprintln!("{diag}");
            ExitCode::from(e.exit_code())
        }
    }
}
