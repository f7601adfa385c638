//! Run configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::hand_model::{default_model, HandModel};
use crate::harness::scenario::{default_suite, ScenarioConfig};
use crate::retarget::{RefineConfig, VectorRetargetConfig};
use crate::tripod_intent::{IntentConfig, PinchGateConfig};

/// Every section is optional and falls back to its defaults; unknown keys
/// anywhere are rejected. `scenario` may be a single scenario object or an
/// array of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub gate: PinchGateConfig,
    #[serde(default)]
    pub intent: IntentConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub baseline: VectorRetargetConfig,
    /// Relative paths are resolved against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand_model_path: Option<PathBuf>,
    #[serde(default = "default_suite", deserialize_with = "one_or_many")]
    pub scenario: Vec<ScenarioConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gate: PinchGateConfig::default(),
            intent: IntentConfig::default(),
            refine: RefineConfig::default(),
            baseline: VectorRetargetConfig::default(),
            hand_model_path: None,
            scenario: default_suite(),
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ScenarioConfig>, D::Error> {
    let value = serde_json::Value::deserialize(d)?;
    let parsed = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|one| vec![one])
    };
    parsed.map_err(serde::de::Error::custom)
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file, resolving `hand_model_path`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        if let (Some(model), Some(dir)) = (&cfg.hand_model_path, path.parent()) {
            if model.is_relative() {
                cfg.hand_model_path = Some(dir.join(model));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.gate.validate()?;
        self.intent.validate()?;
        self.refine.validate()?;
        self.baseline.validate()?;
        if self.scenario.is_empty() {
            return Err(Error::ConfigInvalid("at least one scenario is required".into()));
        }
        let mut names: Vec<&str> = self.scenario.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::ConfigInvalid(format!("duplicate scenario name `{}`", w[0])));
        }
        self.scenario.iter().try_for_each(ScenarioConfig::validate)
    }

    /// The configured hand model, or the bundled default.
    pub fn hand_model(&self) -> Result<HandModel> {
        match &self.hand_model_path {
            Some(path) => HandModel::load(path),
            None => Ok(default_model()),
        }
    }

    pub fn find_scenario(&self, name: &str) -> Result<&ScenarioConfig> {
        self.scenario
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::ConfigInvalid(format!("no scenario named `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_all_defaults() {
        assert_eq!(RunConfig::from_json_str("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        for text in [
            r#"{"gates": {}}"#,
            r#"{"gate": {"d_on": 0.04, "extra": 1}}"#,
            r#"{"refine": {"w_rotation": 1.0}}"#,
            r#"{"scenario": {"name": "a", "speed": 3}}"#,
            r#"{"scenario": [{"name": "a", "segments": [{"phase": "turn", "duration": 1, "rate": 2}]}]}"#,
        ] {
            let err = RunConfig::from_json_str(text).unwrap_err();
            assert!(err.is_validation(), "{text}: {err}");
        }
    }

    #[test]
    fn single_scenario_object() {
        let cfg = RunConfig::from_json_str(
            r#"{"scenario": {"name": "one", "segments": [{"phase": "turn", "duration": 1.0}]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.scenario.len(), 1);
        assert_eq!(cfg.scenario[0].frame_rate, 50.0);
    }

    #[test]
    fn invalid_values() {
        assert!(matches!(
            RunConfig::from_json_str(r#"{"gate": {"d_on": 0.07}}"#),
            Err(Error::ConfigInvalid(_))
        ));
        assert!(matches!(
            RunConfig::from_json_str(r#"{"baseline": {"scale": 0.0}}"#),
            Err(Error::ConfigInvalid(_))
        ));
        assert!(RunConfig::from_json_str(r#"{"scenario": []}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"scenario": [{"name": "a"}, {"name": "a"}]}"#).is_err());
    }
}
