//! The run manifest: a deterministic JSON record of one invocation.

use std::collections::BTreeMap;

use bctau::criteria::{Check, CriterionReport};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Library modules whose version is recorded.
const MODULES: [&str; 7] = ["affine", "bicomplex", "chtau", "connection", "gauss", "metric", "replib"];

/// Checks of one config-driven stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    /// Stage name.
    pub name: String,
    /// Acceptance criterion the stage belongs to, if any.
    pub criterion: Option<u8>,
    /// Measured quantities.
    pub checks: Vec<Check>,
    /// Diagnostic note, such as a flatness warning.
    pub note: Option<String>,
    /// Error that stopped the stage, if any.
    pub error: Option<String>,
}

impl StageSummary {
    /// A stage with no note.
    pub fn new(name: impl Into<String>, criterion: Option<u8>, checks: Vec<Check>) -> Self {
        Self {
            name: name.into(),
            criterion,
            checks,
            note: None,
            error: None,
        }
    }

    /// No error and all checks passed.
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

/// Record of one invocation. Elapsed times are not serialised, so the same
/// config and seed give byte-identical output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    /// Subcommand, e.g. `"metric stokes"`.
    pub command: String,
    /// SHA-256 of the effective config in canonical JSON.
    pub config_hash: String,
    /// Effective config.
    pub config: ExperimentConfig,
    /// Module name to version.
    pub versions: BTreeMap<String, String>,
    /// Config-driven stages.
    pub stages: Vec<StageSummary>,
    /// Acceptance criteria run.
    pub criteria: Vec<CriterionReport>,
    /// Every stage and criterion passed.
    pub passed: bool,
}

impl RunManifest {
    /// Empty manifest for `command`.
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        let mut versions: BTreeMap<String, String> =
            MODULES.iter().map(|m| (m.to_string(), bctau::VERSION.to_string())).collect();
        versions.insert("cli".into(), env!("CARGO_PKG_VERSION").into());
        Self {
            command: command.into(),
            config_hash: config_hash(config),
            config: config.clone(),
            versions,
            stages: Vec::new(),
            criteria: Vec::new(),
            passed: true,
        }
    }

    /// Appends a stage.
    pub fn push_stage(&mut self, s: StageSummary) {
        self.passed &= s.passed();
        self.stages.push(s);
    }

    /// Appends a criterion report.
    pub fn push_criterion(&mut self, r: CriterionReport) {
        self.passed &= r.passed();
        self.criteria.push(r);
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }
}

/// Hex SHA-256 of the config's JSON form.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let json = serde_json::to_string(config).expect("config serialises");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_the_config() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
