//! Runtime configuration, read from TOML.
//!
//! Every key is optional. The file path comes from `--config`, unless the
//! `NEGSPACE_CONFIG` environment variable is set, which takes precedence.
//!
//! ```toml
//! [display]
//! diagonal_in = 55.0
//! aspect = [9.0, 16.0]      # width : height
//! depth_m = 0.5
//!
//! [board]
//! columns = 8
//! rows = 5
//! cell_m = 0.08
//! cube_m = 0.06
//!
//! [rules]
//! total_distance = 22
//! min_step_distance = 4
//!
//! [session]
//! pair_id = 0
//! click_mode = "faithful"   # or "reliable-clicks"
//! pose_rate_hz = 60.0
//! retransmit_ms = 150
//! training_condition = "SS"
//!
//! [network]                 # simulator only
//! latency_ms = 20.0
//! jitter_ms = 5.0
//! loss = 0.0
//! duplicate = 0.0
//! seed = 0
//!
//! [server]
//! tcp = "127.0.0.1:7400"
//! udp = "127.0.0.1:7401"
//! gateway = "127.0.0.1:7402"
//!
//! [agents.assembler]
//! interpretation = "frame-naive"
//! aiming_noise = 0.0
//! misread = { lateral_pointing = 0.5, depth_pointing = 0.5, lateral_verbal = 0.5, depth_verbal = 0.5 }
//!
//! [timing]                  # scripted agents, microseconds
//! dwell_us = 250000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::agent::{AgentPolicy, AgentTiming, Interpretation, MisreadProbabilities};
use super::host::HostConfig;
use super::sim::NetworkModel;
use crate::Role;
use crate::board::BoardSpec;
use crate::geometry::{
    ConditionName, DEFAULT_DEPTH_M, DEFAULT_DIAGONAL_M, DisplayPlane, Point, Vector, WorkspaceVolume, build_volume,
    diagonal_to_size,
};
use crate::protocol::{ClickMode, SessionState, TaskPlan};
use crate::tasks::{RuleSet, TRAINING_SEED};

pub const CONFIG_ENV: &str = "NEGSPACE_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisplayConfig {
    pub diagonal_in: f64,
    pub aspect: [f64; 2],
    pub depth_m: f64,
}

impl Default for DisplayConfig {
    fn default() -> Self {
        Self { diagonal_in: DEFAULT_DIAGONAL_M / 0.0254, aspect: [9.0, 16.0], depth_m: DEFAULT_DEPTH_M }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoardConfig {
    pub columns: u8,
    pub rows: u8,
    pub cell_m: f64,
    pub cube_m: f64,
}

impl Default for BoardConfig {
    fn default() -> Self {
        Self { columns: 8, rows: 5, cell_m: 0.08, cube_m: 0.06 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub pair_id: u32,
    pub click_mode: ClickMode,
    pub pose_rate_hz: f64,
    pub retransmit_ms: u64,
    pub training_condition: ConditionName,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            pair_id: 0,
            click_mode: ClickMode::Faithful,
            pose_rate_hz: 60.0,
            retransmit_ms: 150,
            training_condition: ConditionName::SS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub tcp: String,
    pub udp: String,
    pub gateway: String,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { tcp: "127.0.0.1:7400".into(), udp: "127.0.0.1:7401".into(), gateway: "127.0.0.1:7402".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub interpretation: Interpretation,
    pub aiming_noise: f64,
    pub misread: MisreadProbabilities,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { interpretation: Interpretation::FrameAware, aiming_noise: 0.0, misread: MisreadProbabilities::default() }
    }
}

impl PolicyConfig {
    pub fn policy(&self, role: Role) -> AgentPolicy {
        AgentPolicy { role, aiming_noise: self.aiming_noise, interpretation: self.interpretation, misread: self.misread }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentsConfig {
    pub instructor: PolicyConfig,
    pub assembler: PolicyConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub display: DisplayConfig,
    pub board: BoardConfig,
    pub rules: RuleSet,
    pub session: SessionConfig,
    pub network: NetworkModel,
    pub server: ServerConfig,
    pub agents: AgentsConfig,
    pub timing: AgentTiming,
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads the configuration: `NEGSPACE_CONFIG` if set, else `path`, else defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match env.as_deref().or(path) {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.into(), source })?;
                Self::from_toml(&text, p)
            }
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let volume = self.volume()?;
        self.board_spec(&volume).validate(&volume).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.network.validate()?;
        if !(self.session.pose_rate_hz > 0.0 && self.session.pose_rate_hz <= 1000.0) {
            return Err(ConfigError::Invalid(format!("session.pose_rate_hz = {} must be in (0, 1000]", self.session.pose_rate_hz)));
        }
        if self.session.retransmit_ms == 0 {
            return Err(ConfigError::Invalid("session.retransmit_ms must be positive".into()));
        }
        for p in self.policies() {
            p.validate()?;
        }
        Ok(())
    }

    pub fn volume(&self) -> Result<WorkspaceVolume, ConfigError> {
        let d = &self.display;
        if !(d.diagonal_in > 0.0 && d.aspect[0] > 0.0 && d.aspect[1] > 0.0) {
            return Err(ConfigError::Invalid("display diagonal and aspect must be positive".into()));
        }
        let (w, h) = diagonal_to_size(d.diagonal_in * 0.0254, d.aspect[0], d.aspect[1]);
        let plane = DisplayPlane::from_center(Point::origin(), Vector::x(), Vector::y(), w, h)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        build_volume(&plane, d.depth_m).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn board_spec(&self, volume: &WorkspaceVolume) -> BoardSpec {
        let b = &self.board;
        BoardSpec::centered(volume, b.columns, b.rows, b.cell_m, b.cube_m)
    }

    pub fn policies(&self) -> Vec<AgentPolicy> {
        vec![self.agents.instructor.policy(Role::Instructor), self.agents.assembler.policy(Role::Assembler)]
    }

    pub fn host_config(&self) -> Result<HostConfig, ConfigError> {
        let volume = self.volume()?;
        let board = self.board_spec(&volume);
        let mut training = SessionState::new(self.session.pair_id).training;
        training = TaskPlan { condition: self.session.training_condition, puzzle: TRAINING_SEED as u32, ..training };
        Ok(HostConfig {
            pair_id: self.session.pair_id,
            click_mode: self.session.click_mode,
            volume,
            board,
            rules: self.rules,
            training,
            epoch: chrono::DateTime::UNIX_EPOCH,
            schedule: None,
        })
    }

    pub fn pose_period_us(&self) -> u64 {
        (1e6 / self.session.pose_rate_hz).round() as u64
    }
}
