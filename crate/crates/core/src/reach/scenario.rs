//! Scenario files: plant, controller, sets and run settings in one JSON
//! document. Relative paths are resolved against the scenario's directory.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::algorithm::ReachSettings;
use super::integrate::{IntegratorConfig, Method};
use super::safety::Obstacle;
use crate::bounds::CrownOptions;
use crate::embedding::{ClosedLoop, Strategy};
use crate::error::{ReachError, Result};
use crate::interval::IntervalBox;
use crate::network::{matrix_from_rows, FeedForwardNetwork};
use crate::systems::{LinearSystemModel, Plant, SystemModel, VehicleModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SystemSpec {
    Vehicle(VehicleModel),
    Linear {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        /// Omitted for plants without disturbance.
        #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
        c: Option<Vec<Vec<f64>>>,
        /// Constant offset; zero when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<Plant> {
        match self {
            SystemSpec::Vehicle(m) => {
                m.validate()?;
                Ok(Plant::Vehicle(m.clone()))
            }
            SystemSpec::Linear {
                a,
                b,
                c,
                offset,
                labels,
                name,
            } => {
                let a = matrix_from_rows(a, "A").map_err(|e| ReachError::Config(e.to_string()))?;
                let n = a.nrows();
                let b = matrix_from_rows(b, "B").map_err(|e| ReachError::Config(e.to_string()))?;
                let c = match c {
                    Some(rows) if !rows.is_empty() => {
                        matrix_from_rows(rows, "C").map_err(|e| ReachError::Config(e.to_string()))?
                    }
                    _ => DMatrix::zeros(n, 0),
                };
                let offset = offset.clone().unwrap_or_else(|| vec![0.0; n]);
                let mut m = LinearSystemModel::new(a, b, c, offset)?;
                if let Some(name) = name {
                    m = m.with_name(name.clone());
                }
                if let Some(labels) = labels {
                    m = m.with_labels(labels.clone())?;
                }
                Ok(Plant::Linear(m))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    pub fn build(&self, what: &str) -> Result<IntervalBox> {
        IntervalBox::new(self.lower.clone(), self.upper.clone())
            .map_err(|e| ReachError::Config(format!("{what}: {e}")))
    }
}

impl From<&IntervalBox> for BoxSpec {
    fn from(b: &IntervalBox) -> Self {
        Self {
            lower: b.lower().to_vec(),
            upper: b.upper().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    #[serde(default)]
    pub method: Method,
    /// Defaults to `dt / 25`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

fn one() -> usize {
    1
}

fn default_strategy() -> Strategy {
    Strategy::Hybrid
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: SystemSpec,
    /// Controller weight file.
    pub network: PathBuf,
    pub initial_set: BoxSpec,
    /// Empty bounds for plants without disturbance.
    pub disturbance: BoxSpec,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSpec>,
    #[serde(rename = "Da", default = "one")]
    pub d_a: usize,
    #[serde(rename = "Ds", default = "one")]
    pub d_s: usize,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub crown: CrownOptions,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub mc_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Directory relative paths are resolved against; set when loading.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Everything needed to run a scenario.
#[derive(Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub closed_loop: ClosedLoop,
    pub initial: IntervalBox,
    pub disturbance: IntervalBox,
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ReachError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|source| ReachError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn network_path(&self) -> PathBuf {
        self.resolve(&self.network)
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        let spec = self.integrator.clone().unwrap_or(IntegratorSpec {
            method: Method::Rk4,
            step: None,
        });
        IntegratorConfig {
            method: spec.method,
            step: spec.step.unwrap_or(self.dt / 25.0),
            actuation_step: self.dt,
        }
    }

    pub fn settings(&self) -> ReachSettings {
        ReachSettings {
            strategy: self.strategy,
            d_a: self.d_a,
            d_s: self.d_s,
            horizon: self.horizon,
            integrator: self.integrator_config(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(ReachError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        self.settings().validate()
    }

    /// Loads the controller and checks every dimension.
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        let plant = self.system.build()?;
        let net = FeedForwardNetwork::load(self.network_path())?;
        let initial = self.initial_set.build("initial set")?;
        let disturbance = self.disturbance.build("disturbance")?;
        if initial.dim() != plant.state_dim() {
            return Err(ReachError::Config(format!(
                "initial set has {} coordinates, the plant has {}",
                initial.dim(),
                plant.state_dim()
            )));
        }
        if disturbance.dim() != plant.disturbance_dim() {
            return Err(ReachError::Config(format!(
                "disturbance box has {} coordinates, the plant takes {}",
                disturbance.dim(),
                plant.disturbance_dim()
            )));
        }
        if self.strategy.needs_linear_plant() && plant.as_linear().is_none() {
            return Err(ReachError::Config(format!(
                "strategy `{}` needs a linear plant",
                self.strategy
            )));
        }
        let closed_loop = ClosedLoop::new(plant, net, self.crown)
            .map_err(|e| ReachError::Config(format!("controller does not fit the plant: {e}")))?;
        Ok(Scenario {
            config: self.clone(),
            closed_loop,
            initial,
            disturbance,
        })
    }
}
