use std::fs;
use std::path::Path;

use multidelay::{ApproxKind, DelayDistribution, DeltaStarRule, LinearModel};
use serde::{Deserialize, Serialize};

use crate::error::{lib, CliError};

/// Model settings shared by most subcommands. Every field may come from the JSON config
/// file or a flag; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_star_rule: Option<DeltaStarRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// `self` with every field set in `flags` replaced.
    pub fn merged(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            alpha0: flags.alpha0.or(self.alpha0),
            c: flags.c.or(self.c),
            delays: flags.delays.or(self.delays),
            probs: flags.probs.or(self.probs),
            delta_star_rule: flags.delta_star_rule.or(self.delta_star_rule),
            kind: flags.kind.or(self.kind),
            seed: flags.seed.or(self.seed),
        }
    }

    pub fn model(&self) -> Result<LinearModel, CliError> {
        let alpha0 = self.alpha0.ok_or_else(|| missing("alpha0"))?;
        let c = self.c.ok_or_else(|| missing("C"))?;
        LinearModel::new(alpha0, c).map_err(lib)
    }

    pub fn probs(&self) -> Result<Vec<f64>, CliError> {
        self.probs.clone().ok_or_else(|| missing("probs"))
    }

    pub fn dist(&self) -> Result<DelayDistribution, CliError> {
        let delays = self.delays.clone().ok_or_else(|| missing("delays"))?;
        DelayDistribution::new(delays, self.probs()?).map_err(lib)
    }

    pub fn rule(&self) -> DeltaStarRule {
        self.delta_star_rule.unwrap_or(DeltaStarRule::Mean)
    }

    pub fn approx_kind(&self) -> Result<ApproxKind, CliError> {
        parse_kind(self.kind.as_deref().unwrap_or("second"))
    }
}

pub fn parse_kind(s: &str) -> Result<ApproxKind, CliError> {
    s.parse().map_err(CliError::Usage)
}

fn missing(name: &str) -> CliError {
    CliError::Usage(format!(
        "missing --{name} (not given as a flag or in the config file)"
    ))
}
