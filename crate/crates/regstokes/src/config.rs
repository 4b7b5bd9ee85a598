//! Run configuration files.
//!
//! A config is a TOML file with a top-level `scenario` key, an optional
//! `seed`, and optional `[correction]`, `[stepping]` and per-scenario
//! sections. Anything left out takes the scenario default.
//!
//! ```toml
//! scenario = "blebbing"
//! seed = 1
//!
//! [correction]
//! method = "meanzero"
//! radius = 1000.0
//!
//! [blebbing]
//! r_cortex = 9.85
//! ```

use std::path::Path;

use regstokes_core::scenarios::blebbing::BlebbingParams;
use regstokes_core::scenarios::motility::MotilityParams;
use regstokes_core::scenarios::tethered::TetheredParams;
use regstokes_core::scenarios::{ModelParams, ScenarioConfig, ScenarioKind, Stepping};
use regstokes_core::CorrectionConfig;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteppingOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_fine: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fine_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// A negative value disables the speed criterion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_every: Option<usize>,
}

impl SteppingOverrides {
    pub fn apply(&self, s: &mut Stepping) {
        if let Some(v) = self.dt {
            s.dt = v;
        }
        if let Some(v) = self.dt_fine {
            s.dt_fine = v;
        }
        if let Some(v) = self.fine_window {
            s.fine_window = v;
        }
        if let Some(v) = self.t_end {
            s.t_end = v;
        }
        if let Some(v) = self.stop_speed {
            s.stop_speed = (v >= 0.0).then_some(v);
        }
        if let Some(v) = self.output_every {
            s.output_every = v;
        }
    }

    pub fn from_stepping(s: &Stepping) -> Self {
        SteppingOverrides {
            dt: Some(s.dt),
            dt_fine: Some(s.dt_fine),
            fine_window: Some(s.fine_window),
            t_end: Some(s.t_end),
            stop_speed: Some(s.stop_speed.unwrap_or(-1.0)),
            output_every: Some(s.output_every),
        }
    }
}

/// The file layout, before defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<CorrectionConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stepping: Option<SteppingOverrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tethered: Option<TetheredParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motility: Option<MotilityParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blebbing: Option<BlebbingParams>,
}

impl ConfigFile {
    /// Fully explicit file for `config`; parsing it gives `config` back.
    pub fn from_config(config: &ScenarioConfig) -> Self {
        let mut file = ConfigFile {
            scenario: config.kind(),
            seed: Some(config.run.seed),
            correction: Some(config.run.correction),
            stepping: Some(SteppingOverrides::from_stepping(&config.run.stepping)),
            tethered: None,
            motility: None,
            blebbing: None,
        };
        match &config.model {
            ModelParams::Tethered(p) => file.tethered = Some(p.clone()),
            ModelParams::Motility(p) => file.motility = Some(p.clone()),
            ModelParams::Blebbing(p) => file.blebbing = Some(p.clone()),
        }
        file
    }

    pub fn into_config(self) -> Result<ScenarioConfig, ConfigError> {
        let kind = self.scenario;
        let present = [
            ("tethered", self.tethered.is_some()),
            ("motility", self.motility.is_some()),
            ("blebbing", self.blebbing.is_some()),
        ];
        if let Some((section, _)) = present.iter().find(|(name, set)| *set && *name != kind.name()) {
            return Err(ConfigError::WrongSection {
                section: section.to_string(),
                scenario: kind.name().to_string(),
            });
        }
        let mut config = ScenarioConfig::defaults(kind);
        match (&mut config.model, self.tethered, self.motility, self.blebbing) {
            (ModelParams::Tethered(p), Some(t), _, _) => *p = t,
            (ModelParams::Motility(p), _, Some(m), _) => *p = m,
            (ModelParams::Blebbing(p), _, _, Some(b)) => *p = b,
            _ => {}
        }
        if let Some(c) = self.correction {
            config.run.correction = c;
        }
        if let Some(s) = &self.stepping {
            s.apply(&mut config.run.stepping);
        }
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        Ok(config)
    }
}

/// Reads, defaults and validates a config file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Schema {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let config = file.into_config()?;
    config.validate().map_err(|e| match e {
        regstokes_core::Error::InvalidParameter { name, reason } => ConfigError::Invalid {
            field: name.to_string(),
            reason: reason.to_string(),
            line: find_key_line(text, name),
        },
        other => ConfigError::Core(other),
    })?;
    Ok(config)
}

/// TOML text that reproduces `config` exactly.
pub fn echo_config(config: &ScenarioConfig) -> String {
    toml::to_string(&ConfigFile::from_config(config)).expect("config types always serialize")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn find_key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}
