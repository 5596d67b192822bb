//! Declarative experiment description, read from JSON.
//!
//! ```json
//! {
//!   "channel":  { "eta": 0.9, "v_env": 25 },
//!   "tap":      { "gamma": 0.92, "detector": "heterodyne" },
//!   "strategy": "optimal",
//!   "window":   { "x_th": 1.5, "p_th": null },
//!   "mc":       { "n": 1000000, "seed": 7 },
//!   "qkd":      { "sigma": 40, "attack": "collective", "direction": "direct" },
//!   "output":   { "path": "out/run.csv", "format": "csv" }
//! }
//! ```
//!
//! `window` is only valid with the `herald` strategy; a `null` or missing
//! half-width means no selection on that quadrature, and a herald run without
//! a window evaluates the zero-window limit. `mc.n = 0` disables simulation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Failure;
use crate::channel::{ChannelParams, TapConfig};
use crate::correction::MIN_ERASING_GAMMA;
use crate::herald::{HeraldWindow, MIN_TRAJECTORIES};
use crate::qkd::{Attack, Reconciliation, Scheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelParams,
    pub tap: TapConfig,
    pub strategy: Scheme,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub qkd: Option<QkdConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    #[serde(default)]
    pub x_th: Option<f64>,
    #[serde(default)]
    pub p_th: Option<f64>,
}

impl WindowSpec {
    pub fn to_window(self) -> crate::Result<HeraldWindow> {
        HeraldWindow::new(
            self.x_th.unwrap_or(f64::INFINITY),
            self.p_th.unwrap_or(f64::INFINITY),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QkdConfig {
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_attack")]
    pub attack: Attack,
    #[serde(default = "default_direction")]
    pub direction: Reconciliation,
}

fn default_sigma() -> f64 {
    40.0
}
fn default_attack() -> Attack {
    Attack::Collective
}
fn default_direction() -> Reconciliation {
    Reconciliation::Direct
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn config_error(field: &str, reason: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("`{field}`: {reason}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Failure> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Cross-field checks that the type system does not express.
    pub fn validate(&self) -> Result<(), Failure> {
        if self.window.is_some() && self.strategy != Scheme::Herald {
            return Err(config_error(
                "window",
                "only allowed with the herald strategy",
            ));
        }
        if let Some(w) = self.window {
            w.to_window().map_err(|e| config_error("window", e))?;
        }
        if !self.strategy.supports(self.tap.detector()) {
            return Err(config_error(
                "strategy",
                format!(
                    "{} cannot run with a {} tap",
                    self.strategy.name(),
                    self.tap.detector().name()
                ),
            ));
        }
        if matches!(self.strategy, Scheme::ErasingHom | Scheme::ErasingHet)
            && self.tap.gamma() < MIN_ERASING_GAMMA
        {
            return Err(config_error(
                "tap.gamma",
                "erasing strategies need a positive tap efficiency",
            ));
        }
        if self.mc.n != 0 && self.mc.n < MIN_TRAJECTORIES {
            return Err(config_error(
                "mc.n",
                format!(
                    "must be 0 (no simulation) or at least {MIN_TRAJECTORIES}, got {}",
                    self.mc.n
                ),
            ));
        }
        if let Some(q) = self.qkd {
            if !(q.sigma > 0.0 && q.sigma.is_finite()) {
                return Err(config_error(
                    "qkd.sigma",
                    format!("must be positive and finite, got {}", q.sigma),
                ));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> Option<HeraldWindow> {
        self.window.map(|w| w.to_window().expect("validated"))
    }
}
