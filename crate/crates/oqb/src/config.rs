//! The run configuration document shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use oqb_core::ddpg::TrainConfig;
use oqb_core::dynamics::{DEFAULT_STEP_BOUND, MAX_STEP_BOUND};
use oqb_core::env::{ControlSignal, EnvConfig, EnvParams};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default temperature grid for sweeps: 11 points on [0, 1].
pub fn default_temperature_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticControl {
    pub kappa: f64,
    pub eta: f64,
}

impl StaticControl {
    pub fn signal(&self) -> ControlSignal {
        ControlSignal::fixed(self.eta, self.kappa)
    }

    pub fn label(&self) -> String {
        format!("static_k{}_e{}", self.kappa, self.eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    /// One or more trajectories against time.
    Trajectory,
    /// A (t, T) heatmap from a sweep.
    Sweep,
    /// Training curves.
    Metrics,
}

/// Plot metadata carried by the figure presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSpec {
    pub id: String,
    pub title: String,
    pub kind: FigureKind,
    /// Column plotted on the vertical axis (or the heatmap value).
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
    /// Environment point for simulate/eval/sweep.
    pub point: EnvParams,
    /// Temperatures evaluated by `eval` (empty: the point's own) or swept by
    /// `sweep` (empty: the default grid).
    pub temperatures: Vec<f64>,
    /// Fixed controls for `simulate`.
    pub control: Option<StaticControl>,
    /// Static references written next to `eval` trajectories.
    pub baselines: Vec<StaticControl>,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Integrator step bound for simulate/eval/sweep.
    pub step_bound: f64,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub figure: Option<FigureSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            train: TrainConfig::default(),
            point: EnvParams::new(0.0, 0.1, 0.1, 2.0),
            temperatures: Vec::new(),
            control: None,
            baselines: Vec::new(),
            seed: 0,
            workers: None,
            step_bound: DEFAULT_STEP_BOUND,
            checkpoint: None,
            out: None,
            figure: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Train,
    Eval,
    Sweep,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Temperatures used by `eval`.
    pub fn eval_temperatures(&self) -> Vec<f64> {
        if self.temperatures.is_empty() {
            vec![self.point.temperature]
        } else {
            self.temperatures.clone()
        }
    }

    /// Temperatures used by `sweep`.
    pub fn sweep_temperatures(&self) -> Vec<f64> {
        if self.temperatures.is_empty() {
            default_temperature_grid()
        } else {
            self.temperatures.clone()
        }
    }

    /// Checks everything the given mode needs before any work starts.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        self.env.validate()?;
        if !(self.step_bound > 0.0 && self.step_bound <= MAX_STEP_BOUND) {
            return Err(Error::Config(format!(
                "step_bound must be in (0, {MAX_STEP_BOUND}], got {}",
                self.step_bound
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        let check_point = |p: &EnvParams| -> Result<()> {
            p.check_within(&self.env.param_ranges)?;
            Ok(())
        };
        match mode {
            Mode::Train => self.train.validate()?,
            Mode::Simulate => {
                check_point(&self.point)?;
                let c = self.control.ok_or_else(|| {
                    Error::Config("simulate needs a static control (kappa, eta)".into())
                })?;
                check_control(&self.env, &c)?;
            }
            Mode::Eval | Mode::Sweep => {
                check_point(&self.point)?;
                if self.checkpoint.is_none() {
                    return Err(Error::Config("a checkpoint path is required".into()));
                }
                let temps = if mode == Mode::Eval {
                    self.eval_temperatures()
                } else {
                    self.sweep_temperatures()
                };
                for t in temps {
                    check_point(&EnvParams {
                        temperature: t,
                        ..self.point
                    })?;
                }
                for b in &self.baselines {
                    check_control(&self.env, b)?;
                }
            }
        }
        Ok(())
    }
}

fn check_control(env: &EnvConfig, c: &StaticControl) -> Result<()> {
    if !(c.kappa >= 0.0 && c.kappa <= env.kappa_max) {
        return Err(Error::Config(format!(
            "kappa must be in [0, {}], got {}",
            env.kappa_max, c.kappa
        )));
    }
    if !(c.eta >= env.eta_min && c.eta <= env.eta_max) {
        return Err(Error::Config(format!(
            "eta must be in [{}, {}], got {}",
            env.eta_min, env.eta_max, c.eta
        )));
    }
    Ok(())
}
