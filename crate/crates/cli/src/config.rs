use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stratlab::sharpness::ScheduleStep;
use stratlab::{
    BestConstantOptions, CaseKind, ExtremizerFamily, GridSpec, GroupDescription, StratifiedGroup,
};

use crate::CliError;

/// Everything a run depends on. Serialized back into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Built-in name (`euclidean3`, `heisenberg1`, `h1xr`, ..) or a path to a
    /// group description file.
    pub group: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<CaseKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
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
    /// Euclidean dimension and `d` for `classical-conditions`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    pub seed: u64,
    /// Number of random fields, seeded `seed, seed + 1, ..`.
    pub fields: u64,
    pub bumps: usize,
    pub identities: IdentityConfig,
    pub grid: GridSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<ExtremizerFamily>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<ScheduleStep>>,
    pub best_constant: BestConstantOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            group: "heisenberg1".into(),
            kind: None,
            p: None,
            q: None,
            r: None,
            delta: None,
            alpha: None,
            a: None,
            b: None,
            n: None,
            d: None,
            seed: 0,
            fields: 1,
            bumps: 3,
            identities: IdentityConfig::default(),
            grid: GridSpec::default(),
            family: None,
            schedule: None,
            best_constant: BestConstantOptions::default(),
            output: None,
            csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentityConfig {
    /// Defaults to `{-1, 0, 1, 2, N}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    pub points: usize,
    pub analytic_tol: f64,
    pub fd_tol: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            gammas: None,
            points: 200,
            analytic_tol: 1e-10,
            fd_tol: 1e-6,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid.validate()?;
        self.best_constant.grid.validate()?;
        if self.fields == 0 {
            return Err(CliError::Config("fields must be at least 1".into()));
        }
        if self.identities.points == 0 {
            return Err(CliError::Config(
                "identities.points must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// The group together with its description when it came from a file.
    pub fn resolve_group(&self) -> Result<(StratifiedGroup, Option<GroupDescription>), CliError> {
        let path = Path::new(&self.group);
        if path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let desc = GroupDescription::from_json(&text)?;
            Ok((StratifiedGroup::from_description(&desc)?, Some(desc)))
        } else {
            Ok((StratifiedGroup::builtin(&self.group)?, None))
        }
    }

    pub fn need(&self, name: &str, v: Option<f64>) -> Result<f64, CliError> {
        v.ok_or_else(|| CliError::Config(format!("missing parameter {name}")))
    }
}
