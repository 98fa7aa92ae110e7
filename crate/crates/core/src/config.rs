//! Experiment configuration files (TOML).
//!
//! A config names an optional preset and then overrides any part of it.
//! Unknown keys are rejected everywhere.
//!
//! ```toml
//! preset = "study2"
//! virtual_participants = 4
//! techniques = ["PA", "PASIZE"]
//!
//! [[tasks]]
//! amplitude_cm = 250
//! width_cm = 10
//!
//! [agent]
//! tremor_sd_rad = 0.003
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::agent::AgentParams;
use crate::experiment::{study_positions, ExperimentPlan};
use crate::geometry::{DisplayGeometry, UserPosition};
use crate::tasks::{SelectionMode, TaskSpec};
use crate::transfer::{TechniqueConfig, TechniqueId, TransferParams};

pub const DEFAULT_PARTICIPANTS: u32 = 12;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown preset '{0}' (expected study1 or study2)")]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Study1,
    Study2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Study1 => "study1",
            Preset::Study2 => "study2",
        }
    }

    pub fn plan(self, virtual_participants: u32, master_seed: u64) -> ExperimentPlan {
        match self {
            Preset::Study1 => ExperimentPlan::study1(virtual_participants, master_seed),
            Preset::Study2 => ExperimentPlan::study2(virtual_participants, master_seed),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "study1" => Ok(Preset::Study1),
            "study2" => Ok(Preset::Study2),
            _ => Err(ConfigError::UnknownPreset(s.to_string())),
        }
    }
}

/// A target condition. Either unit may be used per field but not both.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub amplitude_m: Option<f64>,
    pub amplitude_cm: Option<f64>,
    pub width_m: Option<f64>,
    pub width_cm: Option<f64>,
}

fn meters(name: &str, m: Option<f64>, cm: Option<f64>) -> Result<f64, ConfigError> {
    match (m, cm) {
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(v / 100.0),
        (Some(_), Some(_)) => Err(ConfigError::Invalid(format!("give either {name}_m or {name}_cm, not both"))),
        (None, None) => Err(ConfigError::Invalid(format!("task is missing {name}_m or {name}_cm"))),
    }
}

impl TaskEntry {
    pub fn spec(&self) -> Result<TaskSpec<f64>, ConfigError> {
        Ok(TaskSpec::new(
            meters("amplitude", self.amplitude_m, self.amplitude_cm)?,
            meters("width", self.width_m, self.width_cm)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionEntry {
    pub distance_multiple: f64,
    #[serde(default)]
    pub lateral_offset_m: f64,
    #[serde(default = "default_controller_height")]
    pub controller_height_m: f64,
}

fn default_controller_height() -> f64 {
    1.0
}

/// Everything a config file may state. Absent fields fall back to the preset
/// (study1 when none is named).
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub preset: Option<Preset>,
    pub virtual_participants: Option<u32>,
    pub master_seed: Option<u64>,
    pub repetitions: Option<u32>,
    pub tick_rate_hz: Option<f64>,
    pub practice_trials_per_block: Option<u32>,
    pub counterbalance: Option<bool>,
    pub selection: Option<SelectionMode>,
    pub techniques: Option<Vec<TechniqueId>>,
    pub positions: Option<Vec<PositionEntry>>,
    pub tasks: Option<Vec<TaskEntry>>,
    pub geometry: Option<DisplayGeometry<f64>>,
    pub agent: Option<AgentParams>,
    pub transfer: Option<TransferParams<f64>>,
}

impl FromStr for Config {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(toml::from_str(s)?)
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        text.parse()
    }

    pub fn preset(preset: Preset) -> Self {
        Self { preset: Some(preset), ..Self::default() }
    }

    /// Technique curves with overrides applied, for the given display.
    pub fn technique(&self, id: TechniqueId, geom: &DisplayGeometry<f64>) -> Result<TechniqueConfig<f64>, ConfigError> {
        let params = self.transfer.unwrap_or_default();
        TechniqueConfig::from_params(id, &params, geom).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Resolves the config into a validated plan.
    pub fn plan(&self) -> Result<ExperimentPlan, ConfigError> {
        let preset = self.preset.unwrap_or(Preset::Study1);
        let mut plan = preset.plan(
            self.virtual_participants.unwrap_or(DEFAULT_PARTICIPANTS),
            self.master_seed.unwrap_or(0),
        );
        if let Some(g) = self.geometry {
            g.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            plan.geom = g;
            plan.positions = study_positions(&g);
        }
        let ids: Vec<TechniqueId> = match &self.techniques {
            Some(t) => t.clone(),
            None => plan.techniques.iter().map(|t| t.id).collect(),
        };
        plan.techniques = ids.into_iter().map(|id| self.technique(id, &plan.geom)).collect::<Result<_, _>>()?;
        if let Some(p) = &self.positions {
            plan.positions = p
                .iter()
                .map(|e| UserPosition {
                    distance_multiple: e.distance_multiple,
                    lateral_offset_m: e.lateral_offset_m,
                    controller_height_m: e.controller_height_m,
                })
                .collect();
        }
        if let Some(t) = &self.tasks {
            plan.specs = t.iter().map(TaskEntry::spec).collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.repetitions {
            plan.repetitions = v;
        }
        if let Some(v) = self.tick_rate_hz {
            plan.tick_rate_hz = v;
        }
        if let Some(v) = self.practice_trials_per_block {
            plan.practice_trials_per_block = v;
        }
        if let Some(v) = self.counterbalance {
            plan.counterbalance = v;
        }
        if let Some(v) = self.selection {
            plan.selection = v;
        }
        if let Some(a) = self.agent {
            plan.agent = a;
        }
        plan.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(plan)
    }
}
