//! Fixed-step closed-loop simulation: rigid-body dynamics under the cascade
//! controller, scenario scheduling and telemetry capture.
//!
//! Two rates run in lockstep: physics at `dt_physics` (RK4 with rotation
//! re-orthonormalization) and control at `dt_control`, an integer multiple,
//! with zero-order-held commands. Actuators update once per physics step.

use std::io::{self, Write};

use crate::actuation::{actuation_wrench, actuator_step};
use crate::config::{InitialCondition, ScenarioConfig, WaypointTarget};
use crate::control::{CascadeController, Setpoint};
use crate::environment::{contact_at, Contact, WallModel};
use crate::so3;
use crate::vehicle::{com_displacement, gravity_wrench, inertia_matrix, Frame, VehicleParams, VehicleState, Wrench};
use crate::{Error, Mat3, Vec3};

/// Angular-rate envelope; beyond this the run is declared unstable.
pub const INSTABILITY_RATE_LIMIT: f64 = 20.0;

/// Fraction of a segment used as the steady-state window.
pub const STEADY_WINDOW_FRACTION: f64 = 0.25;

/// Convergence bound: force standard deviation below this fraction of the
/// mean declares a pushing segment steady.
pub const CONVERGENCE_STD_FRACTION: f64 = 0.05;

/// Rigid-body part of the state, the quantity advanced by the integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidState {
    pub position: Vec3,
    pub attitude: Mat3,
    /// Body-frame linear velocity.
    pub velocity: Vec3,
    /// Body-frame angular velocity.
    pub angular_velocity: Vec3,
}

impl RigidState {
    pub fn of(state: &VehicleState) -> Self {
        Self {
            position: state.position,
            attitude: state.attitude,
            velocity: state.velocity,
            angular_velocity: state.angular_velocity,
        }
    }

    fn write_back(&self, state: &mut VehicleState) {
        state.position = self.position;
        state.attitude = self.attitude;
        state.velocity = self.velocity;
        state.angular_velocity = self.angular_velocity;
    }
}

/// Time derivative of [`RigidState`].
#[derive(Debug, Clone, Copy)]
pub struct RigidDerivative {
    pub position: Vec3,
    pub attitude: Mat3,
    pub velocity: Vec3,
    pub angular_velocity: Vec3,
}

/// Equations of motion in the body frame.
///
/// `v' = (F_a + F_C + G_lin) / m - omega x v`,
/// `omega' = I(l)^-1 (Gamma_a + Gamma_C + G_ang - omega x I omega)`,
/// `p' = R v`, `R' = R S(omega)`.
pub fn dynamics_derivative(
    rigid: &RigidState,
    actuation: &Wrench,
    contact: &Wrench,
    plate_pos: f64,
    params: &VehicleParams,
) -> Result<RigidDerivative, Error> {
    if actuation.frame != Frame::Body || contact.frame != Frame::Body {
        return Err(Error::InvalidParams(
            "dynamics_derivative expects body-frame wrenches".into(),
        ));
    }
    let gravity = gravity_wrench(&rigid.attitude, plate_pos, params);
    let inertia = inertia_matrix(plate_pos, params)?;
    // Diagonal positive-definite by construction.
    let inertia_inv = Mat3::from_diagonal(&Vec3::new(
        1.0 / inertia[(0, 0)],
        1.0 / inertia[(1, 1)],
        1.0 / inertia[(2, 2)],
    ));

    let omega = rigid.angular_velocity;
    let force = actuation.force + contact.force + gravity.force;
    let torque = actuation.torque + contact.torque + gravity.torque - omega.cross(&(inertia * omega));
    Ok(RigidDerivative {
        position: rigid.attitude * rigid.velocity,
        attitude: rigid.attitude * so3::skew(&omega),
        velocity: force / params.mass - omega.cross(&rigid.velocity),
        angular_velocity: inertia_inv * torque,
    })
}

/// Classical RK4 step on the flat rigid state, with the rotation projected
/// back onto SO(3) afterwards.
pub fn integrate_step<F>(rigid: &RigidState, derivative: F, dt: f64) -> Result<RigidState, Error>
where
    F: Fn(&RigidState) -> Result<RigidDerivative, Error>,
{
    debug_assert!(dt > 0.0);
    let advance = |d: &RigidDerivative, h: f64| RigidState {
        position: rigid.position + h * d.position,
        attitude: rigid.attitude + h * d.attitude,
        velocity: rigid.velocity + h * d.velocity,
        angular_velocity: rigid.angular_velocity + h * d.angular_velocity,
    };
    let k1 = derivative(rigid)?;
    let k2 = derivative(&advance(&k1, 0.5 * dt))?;
    let k3 = derivative(&advance(&k2, 0.5 * dt))?;
    let k4 = derivative(&advance(&k3, dt))?;

    let sixth = dt / 6.0;
    let next = RigidState {
        position: rigid.position
            + sixth * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position),
        attitude: so3::orthonormalize(
            &(rigid.attitude
                + sixth * (k1.attitude + 2.0 * k2.attitude + 2.0 * k3.attitude + k4.attitude)),
        ),
        velocity: rigid.velocity
            + sixth * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity),
        angular_velocity: rigid.angular_velocity
            + sixth
                * (k1.angular_velocity
                    + 2.0 * k2.angular_velocity
                    + 2.0 * k3.angular_velocity
                    + k4.angular_velocity),
    };
    let finite = next.position.iter().all(|v| v.is_finite())
        && next.velocity.iter().all(|v| v.is_finite())
        && next.angular_velocity.iter().all(|v| v.is_finite())
        && next.attitude.iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite("integrated state"));
    }
    Ok(next)
}

/// Total mechanical energy (kinetic + rotational + gravitational), J.
pub fn mechanical_energy(state: &VehicleState, params: &VehicleParams) -> f64 {
    let inertia = inertia_matrix(state.plate_pos, params).expect("plate position in range");
    0.5 * params.mass * state.velocity.norm_squared()
        + 0.5 * state.angular_velocity.dot(&(inertia * state.angular_velocity))
        + params.weight() * state.position.z
}

/// One telemetry row, captured every control tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub position: Vec3,
    /// Roll, pitch, yaw of the attitude, rad.
    pub rpy: Vec3,
    pub velocity_world: Vec3,
    pub body_rate: Vec3,
    /// Shifting-plate position, m.
    pub plate_pos: f64,
    /// CoM displacement, m.
    pub com_offset: f64,
    /// Back-rotor tilt, rad.
    pub tilt: f64,
    pub rotor_speeds: [f64; 8],
    /// Rotor speed over ceiling, per rotor.
    pub saturation: [f64; 8],
    /// Force pressed into the wall, N.
    pub contact_force: f64,
    /// Contact force on the vehicle, world frame.
    pub contact_force_world: Vec3,
    pub in_contact: bool,
    pub position_error: Vec3,
    pub attitude_error: Vec3,
    pub tilt_clamped: bool,
    pub lambda_clamped: bool,
    pub speed_clamped: bool,
    pub actuator_clamped: bool,
}

/// Column names of the telemetry CSV, one per record field component.
pub const TELEMETRY_HEADER: &str = "t,px,py,pz,roll,pitch,yaw,vx,vy,vz,wx,wy,wz,plate,com_offset,tilt,\
omega1,omega2,omega3,omega4,omega5,omega6,omega7,omega8,\
sat1,sat2,sat3,sat4,sat5,sat6,sat7,sat8,\
contact_force,fcx,fcy,fcz,in_contact,epx,epy,epz,erx,ery,erz,\
tilt_clamped,lambda_clamped,speed_clamped,actuator_clamped";

impl TelemetryRecord {
    fn write_csv_row<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let b = |v: bool| u8::from(v);
        write!(out, "{}", self.t)?;
        for v in [
            self.position.x,
            self.position.y,
            self.position.z,
            self.rpy.x,
            self.rpy.y,
            self.rpy.z,
            self.velocity_world.x,
            self.velocity_world.y,
            self.velocity_world.z,
            self.body_rate.x,
            self.body_rate.y,
            self.body_rate.z,
            self.plate_pos,
            self.com_offset,
            self.tilt,
        ] {
            write!(out, ",{v}")?;
        }
        for v in self.rotor_speeds {
            write!(out, ",{v}")?;
        }
        for v in self.saturation {
            write!(out, ",{v}")?;
        }
        write!(
            out,
            ",{},{},{},{},{}",
            self.contact_force,
            self.contact_force_world.x,
            self.contact_force_world.y,
            self.contact_force_world.z,
            b(self.in_contact)
        )?;
        for v in [
            self.position_error.x,
            self.position_error.y,
            self.position_error.z,
            self.attitude_error.x,
            self.attitude_error.y,
            self.attitude_error.z,
        ] {
            write!(out, ",{v}")?;
        }
        writeln!(
            out,
            ",{},{},{},{}",
            b(self.tilt_clamped),
            b(self.lambda_clamped),
            b(self.speed_clamped),
            b(self.actuator_clamped)
        )
    }
}

/// Write the full telemetry table with a header row.
pub fn write_telemetry_csv<W: Write>(records: &[TelemetryRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "{TELEMETRY_HEADER}")?;
    for record in records {
        record.write_csv_row(out)?;
    }
    Ok(())
}

/// Final state of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Unstable { time: f64, reason: String },
}

impl RunStatus {
    pub fn is_unstable(&self) -> bool {
        matches!(self, RunStatus::Unstable { .. })
    }
}

/// Per-waypoint-segment statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSummary {
    pub start: f64,
    pub end: f64,
    /// Setpoint distance behind the wall, when the segment is a pushing one.
    pub dp: Option<f64>,
    /// Mean pushing force over the steady window (final 25%), N.
    pub steady_force: f64,
    /// Force standard deviation over the steady window, N.
    pub force_std: f64,
    pub peak_force: f64,
    /// Steady window kept contact and the force stayed within the
    /// convergence band. Only meaningful for pushing segments.
    pub converged: bool,
    pub max_saturation: f64,
    /// Maximum saturation over the tiltable rotors (3, 4, 5, 8).
    pub max_back_saturation: f64,
    /// RMS of the attitude error norm over the whole segment, rad.
    pub attitude_rms: f64,
    /// Control ticks with any clamp active.
    pub clamp_ticks: usize,
}

/// Run-level report.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub name: String,
    pub status: RunStatus,
    pub segments: Vec<SegmentSummary>,
    pub peak_force: f64,
    pub max_saturation: f64,
    /// A pushing segment failed to converge in its steady window.
    pub oscillation_exceeded: bool,
    pub clamp_ticks: usize,
    pub ticks: usize,
}

impl Summary {
    /// Exit-status view used by the CLI: unstable or oscillating runs fail.
    pub fn success(&self) -> bool {
        !self.status.is_unstable() && !self.oscillation_exceeded
    }
}

/// Outcome of [`run_scenario`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub telemetry: Vec<TelemetryRecord>,
    pub summary: Summary,
}

struct Schedule {
    /// (activation time, setpoint, dp tag of the waypoint).
    entries: Vec<(f64, Setpoint, Option<f64>)>,
}

impl Schedule {
    fn build(config: &ScenarioConfig) -> Result<Self, Error> {
        let initial_position = config.initial.position;
        let default_yaw = match &config.wall {
            Some(wall) => (-wall.normal.y).atan2(-wall.normal.x),
            None => config.initial.yaw,
        };
        let mut entries = Vec::with_capacity(config.waypoints.len().max(1));
        if config.waypoints.is_empty() || config.waypoints[0].time > 0.0 {
            // Hold the initial pose until the first waypoint.
            entries.push((
                0.0,
                Setpoint::hold(initial_position, config.initial.yaw),
                None,
            ));
        }
        for wp in &config.waypoints {
            let yaw = wp.yaw.unwrap_or(default_yaw);
            let (position, dp) = match wp.target()? {
                WaypointTarget::Point(p) => (p, None),
                WaypointTarget::BehindWall(dp) => {
                    let wall = config.wall.as_ref().ok_or_else(|| {
                        Error::InvalidConfig(
                            "behind_wall waypoint requires a [wall] section".into(),
                        )
                    })?;
                    (resolve_behind_wall(dp, wall, &initial_position, &config.vehicle), Some(dp))
                }
            };
            entries.push((wp.time, Setpoint::hold(position, yaw), dp));
        }
        Ok(Self { entries })
    }

    fn active(&self, t: f64) -> (&Setpoint, Option<f64>) {
        let idx = self
            .entries
            .iter()
            .rposition(|(start, _, _)| *start <= t + 1e-12)
            .unwrap_or(0);
        (&self.entries[idx].1, self.entries[idx].2)
    }

    /// Segment boundaries: activation times plus the run end.
    fn boundaries(&self, duration: f64) -> Vec<f64> {
        let mut times: Vec<f64> = self.entries.iter().map(|(t, _, _)| *t).collect();
        times.push(duration);
        times
    }
}

/// World point for a setpoint `dp` behind the wall plane along the
/// interaction axis, keeping the lateral components of the anchor.
///
/// At `dp = 0` the body origin rests where the end-effector tip just touches
/// the plane, so positive `dp` produces a steady pushing force.
fn resolve_behind_wall(dp: f64, wall: &WallModel, anchor: &Vec3, params: &VehicleParams) -> Vec3 {
    let offset = anchor - wall.point;
    let lateral = offset - offset.dot(&wall.normal) * wall.normal;
    wall.point + lateral + wall.normal * (params.ee_offset - dp)
}

fn plate_command(config: &ScenarioConfig, t: f64) -> f64 {
    let mut cmd = config.initial.plate;
    for step in &config.plate_moves {
        if step.time <= t + 1e-12 {
            cmd = step.position;
        }
    }
    cmd
}

fn initial_state(initial: &InitialCondition, params: &VehicleParams) -> VehicleState {
    let mut state = if initial.hover {
        VehicleState::hover(initial.position, initial.yaw, params)
    } else {
        VehicleState::at_rest(initial.position, initial.yaw)
    };
    state.plate_pos = initial.plate;
    state
}

/// Run a scenario to completion or instability.
///
/// Control is evaluated every `dt_control`, physics every `dt_physics`;
/// one telemetry row is captured per control tick. Leaving the angular-rate
/// envelope or producing a non-finite state terminates the run with
/// [`RunStatus::Unstable`].
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutcome, Error> {
    config.validate()?;
    let params = &config.vehicle;
    let schedule = Schedule::build(config)?;

    let substeps = (config.dt_control / config.dt_physics).round() as usize;
    let ticks = (config.duration / config.dt_control).round() as usize;

    let mut state = initial_state(&config.initial, params);
    state.validate(params)?;
    let mut controller = CascadeController::new(config.gains.clone());
    let mut telemetry = Vec::with_capacity(ticks);
    let mut status = RunStatus::Completed;
    let mut actuator_clamped = false;

    'run: for tick in 0..ticks {
        let t = tick as f64 * config.dt_control;
        let (setpoint, _) = schedule.active(t);
        let plate_target = plate_command(config, t);

        let output = controller.step(&state, setpoint, config.dt_control, params)?;
        let contact = evaluate_contact(&state, config, params);
        telemetry.push(make_record(
            t,
            &state,
            &output,
            &contact,
            actuator_clamped,
            params,
        ));
        actuator_clamped = false;

        for sub in 0..substeps {
            let clamps = actuator_step(
                &mut state,
                &output.command,
                plate_target,
                &config.actuators,
                config.dt_physics,
                params,
            );
            actuator_clamped |= clamps.any();

            let act = actuation_wrench(&state.rotor_speeds, state.tilt, params);
            let plate_pos = state.plate_pos;
            let rigid = RigidState::of(&state);
            let next = integrate_step(
                &rigid,
                |s| {
                    let contact = match &config.wall {
                        Some(wall) => {
                            contact_at(
                                &s.position,
                                &s.attitude,
                                &(s.attitude * s.velocity),
                                &(s.attitude * s.angular_velocity),
                                wall,
                                params,
                            )
                            .wrench
                        }
                        None => Wrench::zero(Frame::Body),
                    };
                    dynamics_derivative(s, &act, &contact, plate_pos, params)
                },
                config.dt_physics,
            );
            let t_sub = t + (sub + 1) as f64 * config.dt_physics;
            match next {
                Ok(rigid) => rigid.write_back(&mut state),
                Err(_) => {
                    status = RunStatus::Unstable {
                        time: t_sub,
                        reason: "non-finite state".into(),
                    };
                    break 'run;
                }
            }
            let rate = state.angular_velocity.norm();
            if rate > INSTABILITY_RATE_LIMIT {
                status = RunStatus::Unstable {
                    time: t_sub,
                    reason: format!(
                        "angular rate {rate:.1} rad/s exceeded {INSTABILITY_RATE_LIMIT} rad/s"
                    ),
                };
                break 'run;
            }
        }
    }

    let summary = summarize(config, &schedule, &telemetry, status);
    Ok(RunOutcome { telemetry, summary })
}

fn evaluate_contact(
    state: &VehicleState,
    config: &ScenarioConfig,
    params: &VehicleParams,
) -> Contact {
    match &config.wall {
        Some(wall) => crate::environment::contact_wrench(state, wall, params),
        None => Contact::none(),
    }
}

fn make_record(
    t: f64,
    state: &VehicleState,
    output: &crate::control::CascadeOutput,
    contact: &Contact,
    actuator_clamped: bool,
    params: &VehicleParams,
) -> TelemetryRecord {
    let (roll, pitch, yaw) = so3::to_rpy(&state.attitude);
    TelemetryRecord {
        t,
        position: state.position,
        rpy: Vec3::new(roll, pitch, yaw),
        velocity_world: state.velocity_world(),
        body_rate: state.angular_velocity,
        plate_pos: state.plate_pos,
        com_offset: com_displacement(state.plate_pos, params).unwrap_or(f64::NAN),
        tilt: state.tilt,
        rotor_speeds: state.rotor_speeds,
        saturation: std::array::from_fn(|i| state.rotor_speeds[i] / params.max_rotor_speed),
        contact_force: contact.normal_force,
        contact_force_world: state.attitude * contact.wrench.force,
        in_contact: contact.in_contact(),
        position_error: output.diagnostics.position_error,
        attitude_error: output.diagnostics.attitude_error,
        tilt_clamped: output.diagnostics.tilt.clamped,
        lambda_clamped: output.diagnostics.lambda_clamped,
        speed_clamped: output.diagnostics.speed_clamped,
        actuator_clamped,
    }
}

fn summarize(
    config: &ScenarioConfig,
    schedule: &Schedule,
    telemetry: &[TelemetryRecord],
    status: RunStatus,
) -> Summary {
    let boundaries = schedule.boundaries(config.duration);
    let mut segments = Vec::new();
    for window in boundaries.windows(2) {
        let (start, end) = (window[0], window[1]);
        if end <= start {
            continue;
        }
        let rows: Vec<&TelemetryRecord> = telemetry
            .iter()
            .filter(|r| r.t >= start - 1e-12 && r.t < end - 1e-12)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let dp = schedule.active(start).1;
        segments.push(segment_stats(start, end, dp, &rows));
    }

    let peak_force = telemetry.iter().map(|r| r.contact_force).fold(0.0, f64::max);
    let max_saturation = telemetry
        .iter()
        .flat_map(|r| r.saturation.iter().copied())
        .fold(0.0, f64::max);
    let clamp_ticks = telemetry
        .iter()
        .filter(|r| r.tilt_clamped || r.lambda_clamped || r.speed_clamped || r.actuator_clamped)
        .count();
    // A pushing segment that never settles in its steady window counts as
    // an oscillation-threshold breach; truncated runs keep their flag from
    // the instability status instead.
    let oscillation_exceeded = segments
        .iter()
        .any(|s| s.dp.map(|dp| dp > 0.0).unwrap_or(false) && !s.converged);
    Summary {
        name: config.name.clone(),
        status,
        segments,
        peak_force,
        max_saturation,
        oscillation_exceeded,
        clamp_ticks,
        ticks: telemetry.len(),
    }
}

fn segment_stats(start: f64, end: f64, dp: Option<f64>, rows: &[&TelemetryRecord]) -> SegmentSummary {
    let window_start = start + (1.0 - STEADY_WINDOW_FRACTION) * (end - start);
    let window: Vec<&&TelemetryRecord> = rows.iter().filter(|r| r.t >= window_start).collect();

    let (mut mean, mut std, mut contact_held) = (0.0, 0.0, false);
    if !window.is_empty() {
        mean = window.iter().map(|r| r.contact_force).sum::<f64>() / window.len() as f64;
        std = (window
            .iter()
            .map(|r| (r.contact_force - mean).powi(2))
            .sum::<f64>()
            / window.len() as f64)
            .sqrt();
        contact_held = window.iter().all(|r| r.in_contact);
    }
    let converged = contact_held && mean > 0.0 && std < CONVERGENCE_STD_FRACTION * mean;

    let peak_force = rows.iter().map(|r| r.contact_force).fold(0.0, f64::max);
    let max_saturation = rows
        .iter()
        .flat_map(|r| r.saturation.iter().copied())
        .fold(0.0, f64::max);
    let max_back_saturation = rows
        .iter()
        .flat_map(|r| [3, 4, 5, 8].into_iter().map(|i| r.saturation[i - 1]))
        .fold(0.0, f64::max);
    let attitude_rms = (rows
        .iter()
        .map(|r| r.attitude_error.norm_squared())
        .sum::<f64>()
        / rows.len() as f64)
        .sqrt();
    let clamp_ticks = rows
        .iter()
        .filter(|r| r.tilt_clamped || r.lambda_clamped || r.speed_clamped || r.actuator_clamped)
        .count();
    SegmentSummary {
        start,
        end,
        dp,
        steady_force: mean,
        force_std: std,
        peak_force,
        converged,
        max_saturation,
        max_back_saturation,
        attitude_rms,
        clamp_ticks,
    }
}

/// Render the summary as the plain-text report written next to the CSV.
pub fn render_summary(summary: &Summary) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario: {}\n", summary.name));
    match &summary.status {
        RunStatus::Completed => out.push_str("status: completed\n"),
        RunStatus::Unstable { time, reason } => {
            out.push_str(&format!("status: UNSTABLE at t = {time:.3} s ({reason})\n"))
        }
    }
    out.push_str(&format!(
        "ticks: {}  clamp_ticks: {}  peak_force: {:.3} N  max_saturation: {:.3}\n",
        summary.ticks, summary.clamp_ticks, summary.peak_force, summary.max_saturation
    ));
    out.push_str(&format!(
        "oscillation_threshold_exceeded: {}\n\n",
        summary.oscillation_exceeded
    ));
    out.push_str(
        "segment    start      end       dp   steady_F    std_F   peak_F  max_sat  back_sat  att_rms  conv  clamps\n",
    );
    for (i, s) in summary.segments.iter().enumerate() {
        let dp = s
            .dp
            .map(|v| format!("{v:7.2}"))
            .unwrap_or_else(|| "      -".into());
        out.push_str(&format!(
            "{:>7}  {:7.2}  {:7.2}  {dp}  {:9.3}  {:7.3}  {:7.3}  {:7.3}  {:8.3}  {:7.4}  {:>4}  {:6}\n",
            i + 1,
            s.start,
            s.end,
            s.steady_force,
            s.force_std,
            s.peak_force,
            s.max_saturation,
            s.max_back_saturation,
            s.attitude_rms,
            if s.dp.map(|d| d > 0.0).unwrap_or(false) {
                if s.converged {
                    "yes"
                } else {
                    "NO"
                }
            } else {
                "-"
            },
            s.clamp_ticks,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PlateMove, Waypoint};
    use approx::assert_relative_eq;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    fn zero_wrench() -> Wrench {
        Wrench::zero(Frame::Body)
    }

    #[test]
    fn free_fall_acceleration() {
        let p = params();
        let rigid = RigidState::of(&VehicleState::at_rest(Vec3::new(0.0, 0.0, 5.0), 0.0));
        let d = dynamics_derivative(&rigid, &zero_wrench(), &zero_wrench(), 0.0, &p).unwrap();
        // Level attitude: body z acceleration is world z acceleration.
        assert_relative_eq!(d.velocity, Vec3::new(0.0, 0.0, -9.81), epsilon = 1e-12);
        assert_eq!(d.position, Vec3::zeros());
        assert_eq!(d.angular_velocity, Vec3::zeros());
    }

    #[test]
    fn pure_yaw_torque_spins_up() {
        let p = params();
        let rigid = RigidState::of(&VehicleState::at_rest(Vec3::zeros(), 0.0));
        let act = Wrench {
            force: Vec3::new(0.0, 0.0, p.weight()),
            torque: Vec3::new(0.0, 0.0, 0.0795),
            frame: Frame::Body,
        };
        let d = dynamics_derivative(&rigid, &act, &zero_wrench(), 0.0, &p).unwrap();
        assert_relative_eq!(d.angular_velocity, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(d.velocity.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hover_command_is_equilibrium() {
        let p = params();
        let state = VehicleState::hover(Vec3::new(0.0, 0.0, 1.0), 0.0, &p);
        let act = actuation_wrench(&state.rotor_speeds, state.tilt, &p);
        let d = dynamics_derivative(&RigidState::of(&state), &act, &zero_wrench(), 0.0, &p)
            .unwrap();
        assert!(d.velocity.norm() < 1e-6);
        assert!(d.angular_velocity.norm() < 1e-6);
    }

    #[test]
    fn dynamics_rejects_world_frame_wrench() {
        let p = params();
        let rigid = RigidState::of(&VehicleState::at_rest(Vec3::zeros(), 0.0));
        let bad = Wrench::zero(Frame::World);
        assert!(dynamics_derivative(&rigid, &bad, &zero_wrench(), 0.0, &p).is_err());
    }

    fn ballistic_error(dt: f64, with_tumble: bool) -> f64 {
        // Free flight under gravity: world trajectory is an exact parabola
        // regardless of body tumbling, while the integrator works in the
        // tumbling body frame.
        let p = params();
        let mut state = VehicleState::at_rest(Vec3::new(0.0, 0.0, 10.0), 0.0);
        state.velocity = Vec3::new(1.0, -0.5, 2.0);
        if with_tumble {
            state.angular_velocity = Vec3::new(1.3, -0.8, 2.1);
        }
        let v0_world = state.velocity_world();
        let p0 = state.position;
        let mut rigid = RigidState::of(&state);
        let steps = (1.0 / dt).round() as usize;
        for _ in 0..steps {
            rigid = integrate_step(
                &rigid,
                |s| dynamics_derivative(s, &zero_wrench(), &zero_wrench(), 0.0, &p),
                dt,
            )
            .unwrap();
        }
        let t = steps as f64 * dt;
        let expected = p0 + v0_world * t + 0.5 * Vec3::new(0.0, 0.0, -9.81) * t * t;
        (rigid.position - expected).norm()
    }

    #[test]
    fn ballistic_arc_matches_analytic() {
        assert!(ballistic_error(1e-3, false) < 1e-8);
    }

    #[test]
    fn integrator_is_fourth_order() {
        let e1 = ballistic_error(4e-3, true);
        let e2 = ballistic_error(2e-3, true);
        let e3 = ballistic_error(1e-3, true);
        assert!(e1 / e2 > 12.0, "first halving ratio {}", e1 / e2);
        assert!(e2 / e3 > 12.0, "second halving ratio {}", e2 / e3);
    }

    #[test]
    fn rotation_closure_after_full_turn() {
        let p = params();
        let mut state = VehicleState::at_rest(Vec3::zeros(), 0.0);
        state.angular_velocity = Vec3::new(0.0, 0.0, 1.0);
        let mut rigid = RigidState::of(&state);
        // Step chosen to land exactly on t = 2 pi.
        let steps = 6283;
        let dt = 2.0 * std::f64::consts::PI / steps as f64;
        let act = Wrench {
            force: Vec3::zeros(),
            // Spinning about a principal axis: no gyroscopic torque needed.
            torque: Vec3::zeros(),
            frame: Frame::Body,
        };
        for _ in 0..steps {
            rigid = integrate_step(
                &rigid,
                |s| dynamics_derivative(s, &act, &zero_wrench(), 0.0, &p),
                dt,
            )
            .unwrap();
        }
        let err = (rigid.attitude - Mat3::identity()).norm();
        assert!(err < 1e-6, "closure error {err}");
        assert!(so3::orthonormality_error(&rigid.attitude) < 1e-9);
    }

    #[test]
    fn tumbling_free_fall_conserves_energy() {
        let p = params();
        let mut state = VehicleState::at_rest(Vec3::new(0.0, 0.0, 20.0), 0.3);
        state.velocity = Vec3::new(0.5, 0.2, 1.0);
        state.angular_velocity = Vec3::new(2.0, -1.5, 1.0);
        let e0 = mechanical_energy(&state, &p);
        let mut rigid = RigidState::of(&state);
        for _ in 0..2000 {
            rigid = integrate_step(
                &rigid,
                |s| dynamics_derivative(s, &zero_wrench(), &zero_wrench(), 0.0, &p),
                1e-3,
            )
            .unwrap();
        }
        rigid.write_back(&mut state);
        let e1 = mechanical_energy(&state, &p);
        assert!((e1 - e0).abs() < 1e-7, "energy drift {}", e1 - e0);
    }

    #[test]
    fn integrate_step_flags_non_finite() {
        let p = params();
        let mut state = VehicleState::at_rest(Vec3::zeros(), 0.0);
        state.velocity = Vec3::new(f64::NAN, 0.0, 0.0);
        let r = integrate_step(
            &RigidState::of(&state),
            |s| dynamics_derivative(s, &zero_wrench(), &zero_wrench(), 0.0, &p),
            1e-3,
        );
        assert!(r.is_err());
    }

    fn hover_config(duration: f64) -> ScenarioConfig {
        ScenarioConfig {
            name: "hover".into(),
            duration,
            wall: None,
            waypoints: vec![],
            ..Default::default()
        }
    }

    #[test]
    fn hover_scenario_holds_position() {
        let config = hover_config(10.0);
        let outcome = run_scenario(&config).unwrap();
        assert_eq!(outcome.summary.status, RunStatus::Completed);
        for record in &outcome.telemetry {
            assert!(record.position_error.norm() < 1e-3);
        }
        // Final drift under a millimeter.
        let last = outcome.telemetry.last().unwrap();
        assert!((last.position - config.initial.position).norm() < 1e-3);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut config = hover_config(2.0);
        config.wall = Some(WallModel::default());
        config.waypoints = vec![Waypoint {
            time: 0.5,
            position: None,
            behind_wall: Some(0.4),
            yaw: None,
        }];
        let a = run_scenario(&config).unwrap();
        let b = run_scenario(&config).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_telemetry_csv(&a.telemetry, &mut csv_a).unwrap();
        write_telemetry_csv(&b.telemetry, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn behind_wall_resolution_places_tip_on_plane_at_zero() {
        let p = params();
        let wall = WallModel::default();
        let target = resolve_behind_wall(0.0, &wall, &Vec3::new(0.0, 0.0, 1.0), &p);
        // Tip at the plane: origin one ee_offset in front of it.
        assert_relative_eq!(target, Vec3::new(1.0 - p.ee_offset, 0.0, 1.0), epsilon = 1e-12);
        let target = resolve_behind_wall(0.6, &wall, &Vec3::new(0.0, 0.0, 1.0), &p);
        assert_relative_eq!(target.x, 1.0 - p.ee_offset + 0.6, epsilon = 1e-12);
    }

    #[test]
    fn instability_detection_terminates_run() {
        // Deliberately absurd attitude gains (stiff, undamped) plus a large
        // lateral setpoint step: the roll loop slews past the rate envelope.
        let mut config = hover_config(5.0);
        config.gains.attitude_p = Vec3::new(400.0, 400.0, 400.0);
        config.gains.attitude_d = Vec3::new(1e-3, 1e-3, 1e-3);
        config.gains.attitude_i = Vec3::zeros();
        config.waypoints = vec![Waypoint {
            time: 0.0,
            position: Some(Vec3::new(0.0, -50.0, 1.0)),
            behind_wall: None,
            yaw: Some(0.0),
        }];
        let outcome = run_scenario(&config).unwrap();
        assert!(outcome.summary.status.is_unstable());
        assert!(outcome.telemetry.len() < (5.0 / config.dt_control) as usize);
        match &outcome.summary.status {
            RunStatus::Unstable { reason, .. } => assert!(reason.contains("angular rate")),
            RunStatus::Completed => unreachable!(),
        }
    }

    #[test]
    fn pushing_scenario_reaches_quasi_static_force() {
        // Gentle contact: kiss the wall, then push 0.6 m behind it.
        let mut config = hover_config(14.0);
        config.wall = Some(WallModel::default());
        config.initial.position = Vec3::new(0.3, 0.0, 1.0);
        config.waypoints = vec![
            Waypoint { time: 0.0, position: None, behind_wall: Some(-0.05), yaw: None },
            Waypoint { time: 3.0, position: None, behind_wall: Some(0.0), yaw: None },
            Waypoint { time: 6.0, position: None, behind_wall: Some(0.6), yaw: None },
        ];
        let outcome = run_scenario(&config).unwrap();
        assert_eq!(outcome.summary.status, RunStatus::Completed);
        let push = outcome.summary.segments.last().unwrap();
        assert_eq!(push.dp, Some(0.6));
        // Quasi-static force balance: F = K dp / (1 + K / k_n).
        let expected = 22.0 * 0.6 / (1.0 + 22.0 / 1500.0);
        assert!(
            (push.steady_force - expected).abs() < 0.05 * expected,
            "steady force {} vs {}",
            push.steady_force,
            expected
        );
        assert!(push.converged);
    }

    #[test]
    fn plate_schedule_ramps_at_rate_limit() {
        let mut config = hover_config(6.0);
        config.plate_moves = vec![PlateMove { time: 1.0, position: 0.18 }];
        let outcome = run_scenario(&config).unwrap();
        // After 4 s of ramping at 0.01 m/s the plate sits near 0.04 m but
        // no further than the rate limit allows.
        let at = |t: f64| {
            outcome
                .telemetry
                .iter()
                .find(|r| (r.t - t).abs() < 1e-9)
                .unwrap()
                .plate_pos
        };
        assert_eq!(at(0.5), 0.0);
        assert_relative_eq!(at(5.0), 0.04, epsilon = 1e-6);
        let last = outcome.telemetry.last().unwrap();
        assert!(last.plate_pos <= 0.18 + 1e-12);
        assert_relative_eq!(last.com_offset, last.plate_pos * 0.9 / 3.12, epsilon = 1e-12);
    }
}
