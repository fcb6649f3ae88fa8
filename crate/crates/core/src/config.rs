//! TOML configuration. Every key is optional; omitted keys take the reference
//! room values (40 m x 40 m hall, 23 LEDs on a 9.6 m triangular lattice, six
//! users). Angles are given in degrees, lengths in metres.
//!
//! ```toml
//! scenario = "2"
//! strategy = "smart"
//! trials = 1000
//! power_dbm = [10.0, 20.0, 30.0]
//!
//! [allocation]
//! scheme = "fixed"
//! zeta = 0.7
//!
//! [eve]
//! kind = "grid_over"
//! x_min = 1.0
//! x_max = 39.0
//! y_min = 1.0
//! y_max = 39.0
//! step = 2.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{BodyParams, LedParams, OrientationModel, PdParams};
use crate::error::ConfigError;
use crate::noma::{AllocationScheme, InterferenceSet, SolverOptions};
use crate::sim::{CampaignConfig, EvePlacement, Scenario, SystemParams};
use crate::topology::{self, LatticeKind, RoomLayout, Strategy};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomSection {
    pub length: f64,
    pub width: f64,
    /// Ceiling height Z.
    pub height: f64,
    /// Height z_D of the device plane.
    pub device_plane: f64,
    pub lattice: LatticeKind,
    /// Lattice side l.
    pub side: f64,
    pub anchor: (f64, f64),
    /// Explicit LED coordinates (x, y); replaces the lattice when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leds: Option<Vec<(f64, f64)>>,
}

impl Default for RoomSection {
    fn default() -> Self {
        Self {
            length: 40.0,
            width: 40.0,
            height: 3.98,
            device_plane: 0.85,
            lattice: LatticeKind::Triangular,
            side: 9.6,
            anchor: (20.0, 20.0),
            leds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedSection {
    pub half_angle_deg: f64,
}

impl Default for LedSection {
    fn default() -> Self {
        Self { half_angle_deg: 70.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdSection {
    /// m^2
    pub area: f64,
    pub fov_deg: f64,
    pub refractive_index: f64,
    pub responsivity: f64,
    pub noise_dbm: f64,
}

impl Default for PdSection {
    fn default() -> Self {
        Self { area: 1e-4, fov_deg: 60.0, refractive_index: 1.5, responsivity: 1.0, noise_dbm: -98.35 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodySection {
    /// H
    pub height: f64,
    /// l_d
    pub device_offset: f64,
    /// r
    pub radius: f64,
}

impl Default for BodySection {
    fn default() -> Self {
        Self { height: 1.6, device_offset: 0.4, radius: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrientationSection {
    pub polar_mean_deg: f64,
    pub polar_std_deg: f64,
}

impl Default for OrientationSection {
    fn default() -> Self {
        Self { polar_mean_deg: 29.67, polar_std_deg: 7.78 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Fixed,
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationSection {
    pub scheme: SchemeKind,
    pub zeta: f64,
}

impl Default for AllocationSection {
    fn default() -> Self {
        Self { scheme: SchemeKind::Fixed, zeta: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self { restarts: d.restarts, max_iterations: d.max_iterations, tolerance: d.tolerance, patience: d.patience, seed: d.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Name of a built-in user layout ("1", "2" or "3").
    pub scenario: String,
    /// Explicit user coordinates; replaces the named scenario when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<(f64, f64)>>,
    pub strategy: Strategy,
    pub interference: InterferenceSet,
    pub trials: usize,
    pub seed: u64,
    /// Transmit powers per LED in watts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_w: Option<Vec<f64>>,
    /// Transmit powers per LED in dBm; mutually exclusive with `power_w`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<Vec<f64>>,
    pub room: RoomSection,
    pub led: LedSection,
    pub pd: PdSection,
    pub body: BodySection,
    pub orientation: OrientationSection,
    pub allocation: AllocationSection,
    pub eve: EvePlacement,
    pub solver: SolverSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            scenario: "1".into(),
            users: None,
            strategy: Strategy::Broadcasting,
            interference: InterferenceSet::Physical,
            trials: 10_000,
            seed: 1,
            power_w: None,
            power_dbm: None,
            room: RoomSection::default(),
            led: LedSection::default(),
            pd: PdSection::default(),
            body: BodySection::default(),
            orientation: OrientationSection::default(),
            allocation: AllocationSection::default(),
            eve: EvePlacement::DEFAULT_BOX,
            solver: SolverSection::default(),
        }
    }
}

pub const DEFAULT_POWER_W: f64 = 0.25;

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::range(path, format!("must be positive and finite, got {v}")))
    }
}

fn in_room(path: &str, (x, y): (f64, f64), room: &RoomSection) -> Result<(), ConfigError> {
    if (0.0..=room.length).contains(&x) && (0.0..=room.width).contains(&y) {
        Ok(())
    } else {
        Err(ConfigError::range(path, format!("({x}, {y}) lies outside the {} x {} room", room.length, room.width)))
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| ConfigError::Schema { path: String::new(), message: e.to_string() })?;
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Transmit powers in watts, defaulting to the reference illumination
    /// level.
    pub fn powers_w(&self) -> Result<Vec<f64>, ConfigError> {
        let powers = match (&self.power_w, &self.power_dbm) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::range("power_dbm", "give either power_w or power_dbm, not both"));
            }
            (Some(w), None) => w.clone(),
            (None, Some(dbm)) => dbm.iter().map(|&d| dbm_to_watts(d)).collect(),
            (None, None) => vec![DEFAULT_POWER_W],
        };
        if powers.is_empty() {
            return Err(ConfigError::range("power_w", "sweep list is empty"));
        }
        for p in &powers {
            positive("power_w", *p)?;
        }
        Ok(powers)
    }

    pub fn user_positions(&self) -> Result<Scenario, ConfigError> {
        let scenario = match &self.users {
            Some(users) => Scenario { name: "custom".into(), users: users.clone() },
            None => Scenario::builtin(&self.scenario)
                .ok_or_else(|| ConfigError::range("scenario", format!("unknown scenario `{}`", self.scenario)))?,
        };
        if scenario.users.is_empty() {
            return Err(ConfigError::range("users", "at least one user is required"));
        }
        for (k, &u) in scenario.users.iter().enumerate() {
            in_room(&format!("users[{k}]"), u, &self.room)?;
        }
        Ok(scenario)
    }

    fn room_layout(&self, half_angle: f64) -> Result<RoomLayout, ConfigError> {
        let r = &self.room;
        positive("room.length", r.length)?;
        positive("room.width", r.width)?;
        positive("room.height", r.height)?;
        if !(r.device_plane >= 0.0 && r.device_plane < r.height) {
            return Err(ConfigError::range("room.device_plane", "must lie between the floor and the ceiling"));
        }
        let leds = match &r.leds {
            Some(xy) => {
                for (n, &p) in xy.iter().enumerate() {
                    in_room(&format!("room.leds[{n}]"), p, r)?;
                }
                xy.iter().map(|&(x, y)| crate::geom::Vec3::new(x, y, r.height)).collect()
            }
            None => {
                positive("room.side", r.side)?;
                let built = match r.lattice {
                    LatticeKind::Triangular => {
                        let bound = topology::triangular_side_bound(r.height, r.device_plane, half_angle);
                        topology::triangular_lattice(r.length, r.width, r.height, r.side, r.anchor, bound)
                    }
                    LatticeKind::Square => topology::square_lattice(r.length, r.width, r.height, r.side, r.anchor),
                };
                built.map_err(|e| ConfigError::range("room.side", e.to_string()))?
            }
        };
        if leds.is_empty() {
            return Err(ConfigError::range("room", "no LED inside the room"));
        }
        Ok(RoomLayout { length: r.length, width: r.width, height: r.height, device_plane: r.device_plane, leds })
    }

    fn eve_placement(&self, num_users: usize) -> Result<EvePlacement, ConfigError> {
        let room = &self.room;
        match self.eve {
            EvePlacement::FixedAt { x, y } => in_room("eve", (x, y), room)?,
            EvePlacement::UniformBox { x_min, x_max, y_min, y_max } => {
                if !(x_min <= x_max && y_min <= y_max) {
                    return Err(ConfigError::range("eve", "box bounds are inverted"));
                }
                in_room("eve", (x_min, y_min), room)?;
                in_room("eve", (x_max, y_max), room)?;
            }
            EvePlacement::GridOver { x_min, x_max, y_min, y_max, step } => {
                positive("eve.step", step)?;
                if !(x_min <= x_max && y_min <= y_max) {
                    return Err(ConfigError::range("eve", "grid bounds are inverted"));
                }
                in_room("eve", (x_min, y_min), room)?;
                in_room("eve", (x_max, y_max), room)?;
            }
            EvePlacement::CloneOf { user } => {
                if user >= num_users {
                    return Err(ConfigError::range("eve.user", format!("no user {user} among {num_users}")));
                }
            }
        }
        Ok(self.eve)
    }

    /// Validates every field and builds the campaign.
    pub fn resolve(&self) -> Result<CampaignConfig, ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::range("trials", "at least one trial is required"));
        }
        let half_angle = self.led.half_angle_deg.to_radians();
        if !(self.led.half_angle_deg > 0.0 && self.led.half_angle_deg < 90.0) {
            return Err(ConfigError::range("led.half_angle_deg", "must lie in (0, 90)"));
        }
        if !(self.pd.fov_deg > 0.0 && self.pd.fov_deg <= 90.0) {
            return Err(ConfigError::range("pd.fov_deg", "must lie in (0, 90]"));
        }
        positive("pd.area", self.pd.area)?;
        positive("pd.refractive_index", self.pd.refractive_index)?;
        positive("pd.responsivity", self.pd.responsivity)?;
        positive("body.height", self.body.height)?;
        positive("body.radius", self.body.radius)?;
        if !(self.body.device_offset >= 0.0) {
            return Err(ConfigError::range("body.device_offset", "must be nonnegative"));
        }
        if !(self.orientation.polar_std_deg >= 0.0) {
            return Err(ConfigError::range("orientation.polar_std_deg", "must be nonnegative"));
        }
        let allocation = match self.allocation.scheme {
            SchemeKind::Fixed => {
                let zeta = self.allocation.zeta;
                if !(zeta > 0.5 && zeta <= 1.0) {
                    return Err(ConfigError::range("allocation.zeta", format!("{zeta} is outside (0.5, 1]")));
                }
                AllocationScheme::Fixed { zeta }
            }
            SchemeKind::Optimized => AllocationScheme::Optimized,
        };
        if self.solver.restarts == 0 || self.solver.max_iterations == 0 {
            return Err(ConfigError::range("solver", "restarts and max_iterations must be positive"));
        }

        let room = self.room_layout(half_angle)?;
        let scenario = self.user_positions()?;
        let eve = self.eve_placement(scenario.users.len())?;
        let system = SystemParams {
            led: LedParams::new(half_angle),
            pd: PdParams {
                area: self.pd.area,
                fov: self.pd.fov_deg.to_radians(),
                refractive_index: self.pd.refractive_index,
                responsivity: self.pd.responsivity,
            },
            body: BodyParams { height: self.body.height, radius: self.body.radius, device_offset: self.body.device_offset },
            orientation: OrientationModel {
                polar_mean: self.orientation.polar_mean_deg.to_radians(),
                polar_std: self.orientation.polar_std_deg.to_radians(),
            },
            noise_variance: dbm_to_watts(self.pd.noise_dbm),
        };
        let s = &self.solver;
        Ok(CampaignConfig {
            room,
            system,
            scenario,
            eve,
            strategy: self.strategy,
            allocation,
            powers: self.powers_w()?,
            trials: self.trials,
            master_seed: self.seed,
            interference: self.interference,
            solver: SolverOptions {
                restarts: s.restarts,
                max_iterations: s.max_iterations,
                tolerance: s.tolerance,
                patience: s.patience,
                seed: s.seed,
            },
        })
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<CampaignConfig, ConfigError> {
    Config::from_path(path)?.resolve()
}
