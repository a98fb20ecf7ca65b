//! Scenario configuration: TOML schema, validation, dotted-key overrides
//! and the built-in pushing-task templates.
//!
//! Every field has a default carrying the reference vehicle constants, so a
//! minimal config only describes the schedule. `behind_wall` waypoints are
//! resolved at run time against the wall plane: `dp = 0` rests the
//! end-effector tip on the surface, positive values move the setpoint behind
//! it and produce a steady pushing force.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuation::ActuatorDynamics;
use crate::control::ControlGains;
use crate::environment::WallModel;
use crate::vehicle::VehicleParams;
use crate::{Error, Vec3};

/// Configuration-level failures, kept separate from model errors so the CLI
/// can map them to its exit codes.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// TOML syntax or schema violation; the message carries line/column.
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),

    /// An override path does not exist in the schema.
    #[error("unknown key '{key}'{suggestion}")]
    UnknownKey { key: String, suggestion: String },

    /// Structurally valid but semantically rejected.
    #[error(transparent)]
    Invalid(#[from] Error),
}

/// Starting pose and actuator state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialCondition {
    pub position: Vec3,
    pub yaw: f64,
    /// Start from the hover equilibrium (rotors at hover speed) instead of
    /// rotors-off rest.
    pub hover: bool,
    /// Initial shifting-plate position, m.
    pub plate: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            position: Vec3::new(0.0, 0.0, 1.0),
            yaw: 0.0,
            hover: true,
            plate: 0.0,
        }
    }
}

/// A scheduled position setpoint. Exactly one of `position` / `behind_wall`
/// must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    /// Activation time, s.
    pub time: f64,
    /// Absolute world target for the body origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec3>,
    /// Setpoint distance behind the wall plane along the interaction axis, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behind_wall: Option<f64>,
    /// Heading reference; defaults to facing the wall.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<f64>,
}

/// Resolved waypoint target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaypointTarget {
    Point(Vec3),
    BehindWall(f64),
}

impl Waypoint {
    pub fn target(&self) -> Result<WaypointTarget, Error> {
        match (self.position, self.behind_wall) {
            (Some(p), None) => Ok(WaypointTarget::Point(p)),
            (None, Some(dp)) => Ok(WaypointTarget::BehindWall(dp)),
            _ => Err(Error::InvalidConfig(format!(
                "waypoint at t = {} must set exactly one of position / behind_wall",
                self.time
            ))),
        }
    }
}

/// A scheduled shifting-plate command (the actuator ramps toward it at the
/// plate slew rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateMove {
    pub time: f64,
    pub position: f64,
}

/// Output file names, relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub telemetry: String,
    pub summary: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            telemetry: "telemetry.csv".into(),
            summary: "summary.txt".into(),
        }
    }
}

/// A complete scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Total simulated time, s.
    pub duration: f64,
    /// Physics step, s.
    pub dt_physics: f64,
    /// Control period, s; integer multiple of the physics step.
    pub dt_control: f64,
    /// Recorded for randomized sweeps; scenarios themselves are
    /// deterministic.
    pub seed: u64,
    pub vehicle: VehicleParams,
    pub gains: ControlGains,
    pub actuators: ActuatorDynamics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallModel>,
    pub initial: InitialCondition,
    pub waypoints: Vec<Waypoint>,
    pub plate_moves: Vec<PlateMove>,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            duration: 10.0,
            dt_physics: 1e-3,
            dt_control: 4e-3,
            seed: 0,
            vehicle: VehicleParams::default(),
            gains: ControlGains::default(),
            actuators: ActuatorDynamics::default(),
            wall: None,
            initial: InitialCondition::default(),
            waypoints: Vec::new(),
            plate_moves: Vec::new(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Check every invariant the simulator relies on.
    pub fn validate(&self) -> Result<(), Error> {
        self.vehicle.validate().map_err(invalid)?;
        self.gains.validate()?;
        self.actuators.validate().map_err(invalid)?;
        if let Some(wall) = &self.wall {
            wall.validate()?;
        }
        if self.duration <= 0.0 || !self.duration.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.dt_physics <= 0.0 || self.dt_physics > self.dt_control {
            return Err(Error::InvalidConfig(format!(
                "need 0 < dt_physics <= dt_control, got {} / {}",
                self.dt_physics, self.dt_control
            )));
        }
        let ratio = self.dt_control / self.dt_physics;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "dt_control must be an integer multiple of dt_physics (ratio {ratio})"
            )));
        }
        if self.duration < self.dt_control {
            return Err(Error::InvalidConfig(
                "duration shorter than one control period".into(),
            ));
        }

        let mut last = f64::NEG_INFINITY;
        for wp in &self.waypoints {
            wp.target()?;
            if wp.behind_wall.is_some() && self.wall.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "waypoint at t = {} uses behind_wall but no [wall] is configured",
                    wp.time
                )));
            }
            if !(0.0..self.duration).contains(&wp.time) {
                return Err(Error::InvalidConfig(format!(
                    "waypoint time {} outside [0, duration)",
                    wp.time
                )));
            }
            if wp.time <= last {
                return Err(Error::InvalidConfig(
                    "waypoint times must be strictly increasing".into(),
                ));
            }
            last = wp.time;
        }

        let mut last = f64::NEG_INFINITY;
        for step in &self.plate_moves {
            if !(0.0..self.duration).contains(&step.time) || step.time <= last {
                return Err(Error::InvalidConfig(
                    "plate_moves times must be strictly increasing within [0, duration)".into(),
                ));
            }
            last = step.time;
            if !(0.0..=self.vehicle.max_plate_travel).contains(&step.position) {
                return Err(Error::InvalidConfig(format!(
                    "plate position {} outside [0, {}]",
                    step.position, self.vehicle.max_plate_travel
                )));
            }
        }
        if !(0.0..=self.vehicle.max_plate_travel).contains(&self.initial.plate) {
            return Err(Error::InvalidConfig(format!(
                "initial plate position {} outside [0, {}]",
                self.initial.plate, self.vehicle.max_plate_travel
            )));
        }
        Ok(())
    }

    /// Serialize back to TOML (round-trips through [`parse_config`]).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialization cannot fail")
    }
}

fn invalid(e: Error) -> Error {
    match e {
        Error::InvalidParams(msg) => Error::InvalidConfig(msg),
        other => other,
    }
}

/// Parse and validate a scenario from TOML text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_config_with_overrides(text, &[])
}

/// Parse a scenario, apply `key=value` overrides on dotted paths, validate.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[(String, String)],
) -> Result<ScenarioConfig, ConfigError> {
    let mut value: toml::Value = text.parse()?;
    if !overrides.is_empty() {
        // Schema for key checking: the default config with the optional
        // sections present.
        let schema_config = ScenarioConfig {
            wall: Some(WallModel::default()),
            waypoints: vec![Waypoint {
                time: 0.0,
                position: Some(Vec3::zeros()),
                behind_wall: Some(0.0),
                yaw: Some(0.0),
            }],
            plate_moves: vec![PlateMove {
                time: 0.0,
                position: 0.0,
            }],
            ..Default::default()
        };
        let schema: toml::Value =
            toml::Value::try_from(schema_config).expect("schema serialization");
        for (key, raw) in overrides {
            apply_override(&mut value, &schema, key, raw)?;
        }
    }
    let config: ScenarioConfig = value.try_into()?;
    config.validate()?;
    Ok(config)
}

/// Set one dotted path in `doc`, checking each segment against the schema of
/// the default config so typos are caught with a suggestion.
fn apply_override(
    doc: &mut toml::Value,
    schema: &toml::Value,
    path: &str,
    raw: &str,
) -> Result<(), ConfigError> {
    let segments: Vec<&str> = path.split('.').collect();
    let mut doc_node = doc;
    let mut schema_node = Some(schema);
    for (depth, segment) in segments.iter().enumerate() {
        let leaf = depth == segments.len() - 1;
        if let Ok(index) = segment.parse::<usize>() {
            let arr = doc_node.as_array_mut().ok_or_else(|| ConfigError::UnknownKey {
                key: path.into(),
                suggestion: format!(" ('{segment}' indexes a non-array)"),
            })?;
            if index >= arr.len() {
                return Err(ConfigError::UnknownKey {
                    key: path.into(),
                    suggestion: format!(" (index {index} beyond array length {})", arr.len()),
                });
            }
            schema_node = schema_node
                .and_then(|s| s.as_array())
                .and_then(|a| a.first());
            if leaf {
                arr[index] = parse_raw_value(raw);
                return Ok(());
            }
            doc_node = &mut arr[index];
            continue;
        }

        // Key must exist in the schema (sections with defaults may be absent
        // from the document itself).
        let known = schema_node
            .and_then(|s| s.as_table())
            .map(|t| t.contains_key(*segment))
            .unwrap_or(false);
        if !known {
            let candidates: Vec<String> = schema_node
                .and_then(|s| s.as_table())
                .map(|t| t.keys().cloned().collect())
                .unwrap_or_default();
            let suggestion = nearest_key(segment, &candidates)
                .map(|k| format!(", did you mean '{k}'?"))
                .unwrap_or_default();
            return Err(ConfigError::UnknownKey {
                key: path.into(),
                suggestion,
            });
        }

        let table = doc_node.as_table_mut().ok_or_else(|| ConfigError::UnknownKey {
            key: path.into(),
            suggestion: format!(" ('{segment}' traverses a non-table)"),
        })?;
        if leaf {
            table.insert((*segment).into(), parse_raw_value(raw));
            return Ok(());
        }
        schema_node = schema_node
            .and_then(|s| s.as_table())
            .and_then(|t| t.get(*segment));
        doc_node = table
            .entry((*segment).to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

fn parse_raw_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn nearest_key(key: &str, candidates: &[String]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (edit_distance(key, c), c))
        .min_by_key(|(d, _)| *d)
        .filter(|(d, _)| *d <= key.len().max(3))
        .map(|(_, c)| c.clone())
}

fn edit_distance(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { prev } else { prev + 1 };
            prev = row[j + 1];
            row[j + 1] = cost.min(row[j] + 1).min(prev + 1);
        }
    }
    row[b.len()]
}

/// Pushing task with CoM displacement: approach in steps, touch the
/// surface, push 0.6 m behind it while the plate slides out, then step the
/// setpoint to 0.8 / 1.0 / 1.2 m in sustained contact.
pub fn case1() -> ScenarioConfig {
    let mut config = ScenarioConfig {
        name: "case1".into(),
        duration: 60.0,
        wall: Some(WallModel::default()),
        initial: InitialCondition {
            position: Vec3::new(0.3, 0.0, 1.0),
            ..Default::default()
        },
        ..Default::default()
    };
    config.waypoints = vec![
        wp(0.0, -0.30),
        wp(4.0, 0.0),
        wp(8.0, 0.60),
        wp(36.0, 0.80),
        wp(44.0, 1.00),
        wp(52.0, 1.20),
    ];
    config.plate_moves = vec![PlateMove {
        time: 10.0,
        position: 0.18,
    }];
    config
}

/// Fixed-CoM benchmark: plate locked at zero, contact established directly
/// with a 0.4 m setpoint, stepped to 0.6 and 0.8 m, then (after backing
/// off) contact is re-established straight at 1.0 m.
pub fn case2() -> ScenarioConfig {
    let mut config = ScenarioConfig {
        name: "case2".into(),
        duration: 44.0,
        wall: Some(WallModel::default()),
        initial: InitialCondition {
            position: Vec3::new(0.3, 0.0, 1.0),
            ..Default::default()
        },
        ..Default::default()
    };
    config.waypoints = vec![
        wp(0.0, -0.30),
        wp(4.0, 0.40),
        wp(12.0, 0.60),
        wp(20.0, 0.80),
        wp(28.0, -0.30),
        wp(32.0, 1.00),
    ];
    config
}

fn wp(time: f64, behind_wall: f64) -> Waypoint {
    Waypoint {
        time,
        position: None,
        behind_wall: Some(behind_wall),
        yaw: None,
    }
}
