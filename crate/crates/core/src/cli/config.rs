use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::delay_qos::TrafficQoS;
use crate::error::{Error, Result};
use crate::game::{NetworkEnv, Policy, UserProfile};
use crate::modulation::{Coding, CodingGainModel};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SOURCE_RATE_FRACTION: f64 = 0.1;
/// Normalized delay bound (D B) of the built-in single-user scenario.
pub const DEFAULT_DELAY_NORM: f64 = 500.0;

/// Scenario file contents. JSON, `"version": 1`, unknown fields rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    #[serde(default = "one")]
    pub bandwidth_hz: f64,
    #[serde(default = "one")]
    pub noise_w: f64,
    #[serde(default = "default_packet_bits")]
    pub packet_bits: u32,
    #[serde(default = "default_b_max")]
    pub b_max: u32,
    #[serde(default)]
    pub coding: CodingConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    pub users: Vec<UserConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodingConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "placeholder_gains")]
    pub gains_db: BTreeMap<u32, f64>,
}

impl Default for CodingConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            gains_db: placeholder_gains(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyConfig {
    #[default]
    Pareto,
    Maxrate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    #[serde(default = "one")]
    pub gain: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_rate_pps: Option<f64>,
    /// Source bit rate as a fraction of the bandwidth; `lambda = x B / L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_rate_fraction: Option<f64>,
    pub delay_bound_s: f64,
}

fn one() -> f64 {
    1.0
}

fn default_packet_bits() -> u32 {
    100
}

fn default_b_max() -> u32 {
    10
}

fn placeholder_gains() -> BTreeMap<u32, f64> {
    CodingGainModel::placeholder_tcm().gains_db().clone()
}

impl Default for ScenarioConfig {
    /// One user at unit gain, source rate 0.1 B, `D B = 500`.
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            bandwidth_hz: 1.0,
            noise_w: 1.0,
            packet_bits: default_packet_bits(),
            b_max: default_b_max(),
            coding: CodingConfig::default(),
            policy: PolicyConfig::Pareto,
            users: vec![UserConfig {
                gain: 1.0,
                arrival_rate_pps: None,
                source_rate_fraction: Some(DEFAULT_SOURCE_RATE_FRACTION),
                delay_bound_s: DEFAULT_DELAY_NORM,
            }],
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Configuration(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Configuration(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        if self.users.is_empty() {
            return Err(Error::Configuration("at least one user is required".into()));
        }
        self.to_env(&self.coding_for(self.coding.enabled)?).map(|_| ())
    }

    pub fn policy(&self) -> Policy {
        match self.policy {
            PolicyConfig::Pareto => Policy::ParetoDominant,
            PolicyConfig::Maxrate => Policy::MaxRate,
        }
    }

    pub fn gain_model(&self) -> Result<CodingGainModel> {
        CodingGainModel::new(self.coding.gains_db.clone(), "scenario configuration").map_err(as_configuration)
    }

    /// Coding mode for one run; `coded` overrides `coding.enabled`.
    pub fn coding_for(&self, coded: bool) -> Result<Coding> {
        Ok(if coded {
            Coding::Trellis(self.gain_model()?)
        } else {
            Coding::Uncoded
        })
    }

    /// Coding modes a sweep covers: uncoded, plus coded when enabled.
    pub fn coding_modes(&self) -> Result<Vec<Coding>> {
        let mut modes = vec![Coding::Uncoded];
        if self.coding.enabled {
            modes.push(self.coding_for(true)?);
        }
        Ok(modes)
    }

    pub fn arrival_rate(&self, user: &UserConfig) -> Result<f64> {
        match (user.arrival_rate_pps, user.source_rate_fraction) {
            (Some(_), Some(_)) => Err(Error::Configuration(
                "give either arrival_rate_pps or source_rate_fraction, not both".into(),
            )),
            (Some(rate), None) => Ok(rate),
            (None, fraction) => {
                let x = fraction.unwrap_or(DEFAULT_SOURCE_RATE_FRACTION);
                Ok(x * self.bandwidth_hz / self.packet_bits as f64)
            }
        }
    }

    pub fn user_profile(&self, user: &UserConfig, coding: &Coding) -> Result<UserProfile> {
        let traffic = TrafficQoS::new(self.arrival_rate(user)?, user.delay_bound_s).map_err(as_configuration)?;
        UserProfile::new(user.gain, traffic, self.packet_bits, self.b_max, coding.clone()).map_err(as_configuration)
    }

    pub fn to_env(&self, coding: &Coding) -> Result<NetworkEnv> {
        let users = self
            .users
            .iter()
            .map(|u| self.user_profile(u, coding))
            .collect::<Result<Vec<_>>>()?;
        NetworkEnv::new(self.bandwidth_hz, self.noise_w, users).map_err(as_configuration)
    }

    /// The only user of a single-user scenario.
    pub fn single_user(&self) -> Result<&UserConfig> {
        match self.users.as_slice() {
            [user] => Ok(user),
            users => Err(Error::Configuration(format!(
                "this command needs a single-user scenario, got {} users",
                users.len()
            ))),
        }
    }
}

fn as_configuration(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Configuration(msg),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    DelayNorm,
    SirDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Grid descriptor for a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, start: f64, stop: f64, points: usize, spacing: Spacing) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(Error::Configuration(format!(
                "sweep needs start < stop, got [{start}, {stop}]"
            )));
        }
        if points < 2 {
            return Err(Error::Configuration(format!(
                "sweep needs at least 2 points, got {points}"
            )));
        }
        if spacing == Spacing::Log && start <= 0.0 {
            return Err(Error::Configuration(format!(
                "log-spaced sweep needs start > 0, got {start}"
            )));
        }
        Ok(Self {
            variable,
            start,
            stop,
            points,
            spacing,
        })
    }

    /// Normalized delay `D B`, log-spaced over `[10, 1e4]` with 200 points.
    pub fn default_delay() -> Self {
        Self {
            variable: SweepVariable::DelayNorm,
            start: 10.0,
            stop: 1e4,
            points: 200,
            spacing: Spacing::Log,
        }
    }

    /// SIR in dB, linear over `[0, 40]` with 400 points.
    pub fn default_sir() -> Self {
        Self {
            variable: SweepVariable::SirDb,
            start: 0.0,
            stop: 40.0,
            points: 400,
            spacing: Spacing::Linear,
        }
    }

    /// Grid values in ascending order; the endpoints are exact.
    pub fn values(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == last {
                    return self.stop;
                }
                let t = i as f64 / last as f64;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => self.start * (self.stop / self.start).powf(t),
                }
            })
            .collect()
    }
}
