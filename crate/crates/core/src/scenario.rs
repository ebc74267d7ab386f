//! JSON scenario files: crane, controller, reference, simulation and an
//! optional wind gust. Unknown keys are rejected.

use std::path::Path;

use nalgebra::{Vector3, Vector5};
use serde::{Deserialize, Serialize};

use crate::control::{Controller, ControllerGains, ControllerRegistry, ControllerSpec, Reference, SwingDamping};
use crate::error::{CraneError, Result};
use crate::model::{CraneParameters, GeneralizedState};
use crate::sim::{Disturbance, SimulationConfig};
use crate::wind::{DragConfig, GustProfile};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    Full,
    Partial,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub name: String,
    #[serde(default)]
    pub notes: String,
    pub paper_fidelity: Fidelity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default = "ControllerSection::default_kind")]
    pub kind: String,
    pub gains: ControllerGains,
}

impl ControllerSection {
    fn default_kind() -> String {
        SwingDamping::NAME.to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub q: [f64; 5],
    #[serde(default)]
    pub qdot: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub duration: f64,
    #[serde(default = "SimulationSection::default_stride")]
    pub record_stride: usize,
    pub initial_state: StateSection,
    #[serde(default)]
    pub saturation: Option<[Option<f64>; 3]>,
}

impl SimulationSection {
    fn default_stride() -> usize {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub gust: GustProfile,
    #[serde(default)]
    pub drag: DragConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub metadata: Metadata,
    pub crane: CraneParameters,
    pub controller: ControllerSection,
    pub reference: ReferenceSection,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub disturbance: Option<DisturbanceSection>,
}

impl ScenarioConfig {
    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| CraneError::Config(format!("schema error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CraneError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CraneError::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.metadata.name.trim().is_empty() {
            return Err(CraneError::Config("metadata.name must not be empty".into()));
        }
        self.crane.validate()?;
        self.controller.gains.validate_nonnegative()?;
        self.reference()?;
        self.simulation_config()?.validate()?;
        if let Some(d) = &self.disturbance {
            for flag in d.gust.flags() {
                log::warn!("{}: {flag}", self.metadata.name);
            }
        }
        Ok(())
    }

    pub fn reference(&self) -> Result<Reference> {
        let r = self.reference;
        if ![r.alpha, r.beta, r.d].iter().all(|v| v.is_finite()) {
            return Err(CraneError::Config("reference values must be finite".into()));
        }
        Reference::set_point(r.alpha, r.beta, r.d)
    }

    pub fn q1d(&self) -> Vector3<f64> {
        Vector3::new(self.reference.alpha, self.reference.beta, self.reference.d)
    }

    pub fn simulation_config(&self) -> Result<SimulationConfig> {
        let s = &self.simulation;
        Ok(SimulationConfig {
            dt: s.dt,
            duration: s.duration,
            initial_state: GeneralizedState::new(Vector5::from(s.initial_state.q), Vector5::from(s.initial_state.qdot)),
            saturation: s.saturation,
            disturbance: self.disturbance.map(|d| Disturbance { gust: d.gust, drag: d.drag }),
            record_stride: s.record_stride,
        })
    }

    pub fn build_controller(&self, registry: &ControllerRegistry) -> Result<Box<dyn Controller>> {
        let spec = ControllerSpec { gains: self.controller.gains, reference: self.reference()? };
        registry.build(&self.controller.kind, &spec)
    }
}
