use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::orgmodel::{load_org_value, OrgSpec};
use crate::pathfinder::DangerWeights;
use crate::world::{parse_map, Rules, TeamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Acmas,
    Ocmas,
}

/// How one team is driven.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamBinding {
    pub id: u8,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org_spec_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org_spec: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mediation_delay: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Punishments {
    #[serde(default = "default_box")]
    pub box_cost: u32,
    #[serde(default = "default_threat")]
    pub threat: u32,
    #[serde(default = "default_explosion")]
    pub explosion: u32,
    #[serde(default = "default_horizon")]
    pub fuse_horizon: u32,
}

fn default_box() -> u32 {
    5
}
fn default_threat() -> u32 {
    DangerWeights::default().threat
}
fn default_explosion() -> u32 {
    DangerWeights::default().explosion
}
fn default_horizon() -> u32 {
    DangerWeights::default().fuse_horizon
}

impl Default for Punishments {
    fn default() -> Self {
        Punishments {
            box_cost: default_box(),
            threat: default_threat(),
            explosion: default_explosion(),
            fuse_horizon: default_horizon(),
        }
    }
}

impl Punishments {
    pub fn weights(&self) -> DangerWeights {
        DangerWeights {
            threat: self.threat,
            explosion: self.explosion,
            fuse_horizon: self.fuse_horizon,
        }
    }
}

fn d_fuse() -> u32 {
    Rules::default().fuse_ticks
}
fn d_range() -> u32 {
    Rules::default().blast_range
}
fn d_linger() -> u32 {
    Rules::default().explosion_linger
}
fn d_capacity() -> u32 {
    Rules::default().bombs_capacity
}
fn d_max_ticks() -> u64 {
    500
}
fn d_delay() -> u64 {
    1
}
fn d_bid_window() -> u64 {
    2
}
fn d_backoff() -> u64 {
    5
}

/// A scenario as written in a config file. `map_file` and `org_spec_file`
/// paths are relative to the file; [`load_config`] inlines them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    #[serde(default = "d_fuse")]
    pub fuse_ticks: u32,
    #[serde(default = "d_range")]
    pub blast_range: u32,
    #[serde(default = "d_linger")]
    pub explosion_linger: u32,
    #[serde(default = "d_capacity")]
    pub bombs_capacity: u32,
    #[serde(default = "d_max_ticks")]
    pub max_ticks: u64,
    #[serde(default)]
    pub seed: u64,
    pub teams: Vec<TeamBinding>,
    #[serde(default)]
    pub punishments: Punishments,
    #[serde(default = "d_delay")]
    pub mediation_delay: u64,
    #[serde(default = "d_bid_window")]
    pub bid_window: u64,
    #[serde(default = "d_backoff")]
    pub backoff: u64,
}

impl ScenarioConfig {
    /// Minimal config around inline map text; every knob at its default.
    pub fn inline(map: &str, teams: Vec<TeamBinding>) -> Self {
        ScenarioConfig {
            map_file: None,
            map: Some(map.to_string()),
            fuse_ticks: d_fuse(),
            blast_range: d_range(),
            explosion_linger: d_linger(),
            bombs_capacity: d_capacity(),
            max_ticks: d_max_ticks(),
            seed: 0,
            teams,
            punishments: Punishments::default(),
            mediation_delay: d_delay(),
            bid_window: d_bid_window(),
            backoff: d_backoff(),
        }
    }

    pub fn rules(&self) -> Rules {
        Rules {
            fuse_ticks: self.fuse_ticks,
            blast_range: self.blast_range,
            explosion_linger: self.explosion_linger,
            bombs_capacity: self.bombs_capacity,
        }
    }

    pub fn team(&self, id: TeamId) -> Option<&TeamBinding> {
        self.teams.iter().find(|t| t.id == id.0)
    }

    pub fn delay_for(&self, team: &TeamBinding) -> u64 {
        team.mediation_delay.unwrap_or(self.mediation_delay)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Inlines file references relative to `base`.
    pub fn resolve(mut self, base: &Path) -> Result<Self, HarnessError> {
        if let Some(file) = self.map_file.take() {
            if self.map.is_some() {
                return Err(HarnessError::Config("give either map or map_file, not both".into()));
            }
            self.map = Some(read(&base.join(file))?);
        }
        for t in &mut self.teams {
            if let Some(file) = t.org_spec_file.take() {
                if t.org_spec.is_some() {
                    return Err(HarnessError::Config(format!(
                        "team {}: give either org_spec or org_spec_file",
                        t.id
                    )));
                }
                let path = base.join(file);
                let text = read(&path)?;
                let value = serde_json::from_str(&text)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                t.org_spec = Some(value);
            }
        }
        Ok(self)
    }

    /// Checks a resolved config and loads the org specs, indexed like `teams`.
    pub fn validate(&self) -> Result<Vec<Option<OrgSpec>>, HarnessError> {
        if self.map_file.is_some() || self.teams.iter().any(|t| t.org_spec_file.is_some()) {
            return Err(HarnessError::Config("config has unresolved file references".into()));
        }
        let map = self
            .map
            .as_deref()
            .ok_or_else(|| HarnessError::Config("no map given".into()))?;
        let parsed = parse_map(map)?;
        let mut ids: Vec<u8> = self.teams.iter().map(|t| t.id).collect();
        ids.sort();
        let mut in_map: Vec<u8> = parsed.spawns.iter().map(|s| s.team.0).collect();
        in_map.dedup();
        if ids != in_map {
            return Err(HarnessError::Config(format!(
                "teams {ids:?} do not match the map's teams {in_map:?}"
            )));
        }
        if self.max_ticks == 0 || self.bid_window == 0 {
            return Err(HarnessError::Config("max_ticks and bid_window must be positive".into()));
        }
        self.teams
            .iter()
            .map(|t| match (t.strategy, &t.org_spec) {
                (Strategy::Acmas, Some(_)) => Err(HarnessError::Config(format!(
                    "team {}: acmas teams take no org spec",
                    t.id
                ))),
                (Strategy::Acmas, None) => Ok(None),
                (Strategy::Ocmas, None) => Err(HarnessError::Config(format!("team {}: ocmas needs an org spec", t.id))),
                (Strategy::Ocmas, Some(v)) => {
                    let spec = load_org_value(v)?;
                    super::library::check_org_spec(&spec)
                        .map_err(|m| HarnessError::Config(format!("team {}: {m}", t.id)))?;
                    Ok(Some(spec))
                }
            })
            .collect()
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.display().to_string(), e.to_string()))
}

/// Reads a config file and inlines everything it references.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = read(path)?;
    let cfg: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let cfg = cfg.resolve(&base)?;
    cfg.validate()?;
    Ok(cfg)
}
