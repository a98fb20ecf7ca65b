//! Cascade controller: selective impedance (outer loop), geometric attitude
//! control on SO(3) (inner loop), tilt-angle resolution and pseudo-inverse
//! allocation.
//!
//! One pass through [`CascadeController::step`]:
//!
//! 1. the impedance law turns position/velocity errors into a world-frame
//!    force demand with weight compensation;
//! 2. the roll angle that realizes the lateral part of that demand is
//!    extracted (the platform has no body-y thrust), giving the attitude
//!    reference together with the pitch/yaw setpoints;
//! 3. the geometric attitude law produces the body torque demand;
//! 4. the force demand is projected into the body frame, the back-rotor
//!    tilt that realizes the x/z split is solved for, and the eight rotor
//!    speed-squares come from the pseudo-inverse of the allocation matrix.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::actuation::{allocation_matrix, RotorCommand};
use crate::so3;
use crate::vehicle::{gravity_wrench, inertia_matrix, VehicleParams, VehicleState};
use crate::{Error, Mat3, Vec3};

/// Orthonormality tolerance for rotation inputs to the attitude laws.
const ROTATION_TOL: f64 = 1e-6;

/// Diagonal gain sets of the cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlGains {
    /// Impedance stiffness diagonal, N/m.
    pub stiffness: Vec3,
    /// Impedance damping diagonal, N s/m.
    pub damping: Vec3,
    /// Attitude proportional diagonal.
    pub attitude_p: Vec3,
    /// Attitude rate diagonal.
    pub attitude_d: Vec3,
    /// Attitude integral diagonal.
    pub attitude_i: Vec3,
    /// Weight of the rotation error inside the integral error.
    pub integral_mix: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            stiffness: Vec3::new(22.0, 22.0, 80.0),
            damping: Vec3::new(10.0, 10.0, 45.0),
            attitude_p: Vec3::new(5.0, 5.0, 3.0),
            attitude_d: Vec3::new(1.0, 1.4, 0.25),
            attitude_i: Vec3::new(0.0, 3.25, 0.5),
            integral_mix: 0.8,
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [("stiffness", &self.stiffness), ("damping", &self.damping)] {
            if v.iter().any(|g| *g <= 0.0 || !g.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} diagonal must be strictly positive, got {v:?}"
                )));
            }
        }
        for (name, v) in [
            ("attitude_p", &self.attitude_p),
            ("attitude_d", &self.attitude_d),
            ("attitude_i", &self.attitude_i),
        ] {
            if v.iter().any(|g| *g < 0.0 || !g.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} diagonal must be non-negative, got {v:?}"
                )));
            }
        }
        if self.integral_mix <= 0.0 || !self.integral_mix.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "integral_mix must be strictly positive, got {}",
                self.integral_mix
            )));
        }
        Ok(())
    }
}

/// Desired trajectory point handed to the cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    /// Pitch reference, rad.
    pub pitch: f64,
    /// Yaw reference, rad.
    pub yaw: f64,
    /// Body-rate reference, rad/s.
    pub body_rate: Vec3,
    /// Body-rate acceleration reference, rad/s^2.
    pub body_rate_accel: Vec3,
}

impl Setpoint {
    /// Hold a position with level attitude and a heading.
    pub fn hold(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            pitch: 0.0,
            yaw,
            body_rate: Vec3::zeros(),
            body_rate_accel: Vec3::zeros(),
        }
    }
}

/// Attitude tracking errors, including the accumulated integral.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttitudeErrorState {
    /// Rotation error `e_R`.
    pub rotation: Vec3,
    /// Rate error `e_omega`.
    pub rate: Vec3,
    /// Integral of `e_omega + c2 * e_R`.
    pub integral: Vec3,
}

impl AttitudeErrorState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Rotation and rate tracking errors on SO(3).
///
/// `e_R = vee(R_des^T R - R^T R_des) / 2`, `e_omega = omega - R^T R_des omega_des`.
pub fn attitude_errors(
    attitude: &Mat3,
    body_rate: &Vec3,
    attitude_des: &Mat3,
    body_rate_des: &Vec3,
) -> Result<(Vec3, Vec3), Error> {
    so3::check_rotation(attitude, ROTATION_TOL)?;
    so3::check_rotation(attitude_des, ROTATION_TOL)?;
    let q = attitude_des.transpose() * attitude;
    let e_rot = 0.5 * so3::vee(&(q - q.transpose()));
    let e_rate = body_rate - attitude.transpose() * attitude_des * body_rate_des;
    Ok((e_rot, e_rate))
}

/// Geometric attitude law: PD+I on the SO(3) errors plus gyroscopic,
/// gravity-moment and reference feedforward terms.
///
/// The gravity feedforward subtracts the applied CoM moment (for a forward
/// CoM that is a nose-up trim torque), so a displaced plate holds attitude
/// with zero steady error and an empty integral.
pub fn attitude_control(
    errors: &AttitudeErrorState,
    attitude: &Mat3,
    body_rate: &Vec3,
    plate_pos: f64,
    attitude_des: &Mat3,
    body_rate_des: &Vec3,
    body_rate_accel_des: &Vec3,
    gains: &ControlGains,
    params: &VehicleParams,
) -> Result<Vec3, Error> {
    let inertia = inertia_matrix(plate_pos, params)?;
    let gravity_moment = gravity_wrench(attitude, plate_pos, params).torque;
    let relative = attitude.transpose() * attitude_des;
    let reference = inertia
        * (so3::skew(body_rate) * relative * body_rate_des - relative * body_rate_accel_des);
    Ok(-gains.attitude_p.component_mul(&errors.rotation)
        - gains.attitude_d.component_mul(&errors.rate)
        - gains.attitude_i.component_mul(&errors.integral)
        + body_rate.cross(&(inertia * body_rate))
        - gravity_moment
        - reference)
}

/// Selective impedance law: world-frame force demand.
///
/// `F = M a_des - D e_v - K e_p + omega_w x (M v_w) + m g e3`, with the
/// weight-compensation term pointing up.
pub fn impedance_force(
    position: &Vec3,
    velocity_world: &Vec3,
    body_rate_world: &Vec3,
    setpoint: &Setpoint,
    gains: &ControlGains,
    params: &VehicleParams,
) -> Vec3 {
    let e_p = position - setpoint.position;
    let e_v = velocity_world - setpoint.velocity;
    params.mass * setpoint.acceleration - gains.damping.component_mul(&e_v)
        - gains.stiffness.component_mul(&e_p)
        + body_rate_world.cross(&(params.mass * velocity_world))
        + Vec3::new(0.0, 0.0, params.weight())
}

/// Roll angle that lets the roll-coupled x/z thrust realize a world force
/// demand at the given pitch/yaw.
pub fn desired_roll(force_world: &Vec3, pitch: f64, yaw: f64) -> Result<f64, Error> {
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let lateral = sy * force_world.x - cy * force_world.y;
    let vertical = sp * cy * force_world.x + sp * sy * force_world.y + cp * force_world.z;
    if lateral == 0.0 && vertical == 0.0 {
        return Err(Error::DegenerateDemand("desired_roll"));
    }
    Ok(lateral.atan2(vertical))
}

/// Project a world force demand into the body x/z force pair `(F1, F3)`.
///
/// `F3` absorbs the lateral demand through the roll coupling and is always
/// non-negative; together with [`desired_roll`] this inverts the Z-Y-X
/// rotation of `(F1, 0, F3)` exactly.
pub fn body_force_targets(force_world: &Vec3, pitch: f64, yaw: f64) -> (f64, f64) {
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let axial = cp * cy * force_world.x + cp * sy * force_world.y - sp * force_world.z;
    let lateral = sy * force_world.x - cy * force_world.y;
    let vertical = sp * cy * force_world.x + sp * sy * force_world.y + cp * force_world.z;
    (axial, lateral.hypot(vertical))
}

/// Tilt-angle solution with the range clamp surfaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltSolution {
    /// Clamped tilt command, rad.
    pub angle: f64,
    /// Unclamped solution of the inversion, rad.
    pub raw: f64,
    pub clamped: bool,
}

/// Back-rotor tilt that splits `(F1, F3)` while honoring the pitch torque.
///
/// Inverts the forward actuation map: `alpha = pi/2 - atan2(F3 L + Gamma2, 2 L F1)`.
pub fn tilt_angle(
    axial_force: f64,
    vertical_force: f64,
    pitch_torque: f64,
    params: &VehicleParams,
) -> Result<TiltSolution, Error> {
    let along = vertical_force * params.rotor_arm_x + pitch_torque;
    let across = 2.0 * params.rotor_arm_x * axial_force;
    if along == 0.0 && across == 0.0 {
        return Err(Error::DegenerateDemand("tilt_angle"));
    }
    let raw = std::f64::consts::FRAC_PI_2 - along.atan2(across);
    let angle = raw.clamp(params.tilt_min, params.tilt_max);
    Ok(TiltSolution {
        angle,
        raw,
        clamped: angle != raw,
    })
}

/// Result of the pseudo-inverse allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Non-negative rotor speed-squares, rad^2/s^2.
    pub lambda: [f64; 8],
    /// Speed/tilt command after clamping.
    pub command: RotorCommand,
    /// Some pseudo-inverse component went negative and was zeroed.
    pub lambda_clamped: bool,
    /// Some speed exceeded the ceiling and was clamped.
    pub speed_clamped: bool,
}

/// Resolve a body wrench demand into rotor speeds at a given tilt.
///
/// Minimum-norm least squares through the pseudo-inverse of `H(alpha)`;
/// negative speed-squares are zeroed in a single pass and the square roots
/// are clamped to the rotor ceiling, with both events reported.
pub fn allocate(
    force: &Vec3,
    torque: &Vec3,
    tilt: f64,
    params: &VehicleParams,
) -> Result<Allocation, Error> {
    let demand = SVector::<f64, 6>::new(force.x, force.y, force.z, torque.x, torque.y, torque.z);
    if demand.iter().any(|v| !v.is_finite()) || !tilt.is_finite() {
        return Err(Error::NonFinite("allocation demand"));
    }
    let h = allocation_matrix(tilt, params);
    let pinv = h
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .map_err(|_| Error::Numeric("allocation pseudo-inverse"))?;
    let solution = pinv * demand;

    let mut lambda = [0.0_f64; 8];
    let mut lambda_clamped = false;
    let mut speed_clamped = false;
    let mut speeds = [0.0_f64; 8];
    for i in 0..8 {
        let value = solution[i];
        if value < 0.0 {
            lambda_clamped = true;
        }
        lambda[i] = value.max(0.0);
        let speed = lambda[i].sqrt();
        if speed > params.max_rotor_speed {
            speed_clamped = true;
        }
        speeds[i] = speed.min(params.max_rotor_speed);
    }
    Ok(Allocation {
        lambda,
        command: RotorCommand {
            rotor_speeds: speeds,
            tilt,
        },
        lambda_clamped,
        speed_clamped,
    })
}

/// Per-step controller outputs kept for telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub position_error: Vec3,
    pub velocity_error: Vec3,
    pub attitude_error: Vec3,
    pub rate_error: Vec3,
    /// World-frame force demand from the impedance law.
    pub force_world: Vec3,
    /// Body-frame force demand `(F1, F3)`.
    pub force_body: (f64, f64),
    /// Body torque demand.
    pub torque_body: Vec3,
    pub tilt: TiltSolution,
    pub lambda_clamped: bool,
    pub speed_clamped: bool,
    /// Commanded speed over ceiling, per rotor.
    pub saturation: [f64; 8],
}

/// Output of one cascade evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutput {
    pub command: RotorCommand,
    /// Roll reference extracted from the force demand, rad.
    pub desired_roll: f64,
    pub diagnostics: Diagnostics,
}

/// The cascade controller; owns its attitude error state.
///
/// One instance per vehicle. Instances are independent, so scenario sweeps
/// can run controllers in parallel.
#[derive(Debug, Clone)]
pub struct CascadeController {
    pub gains: ControlGains,
    errors: AttitudeErrorState,
}

impl CascadeController {
    pub fn new(gains: ControlGains) -> Self {
        Self {
            gains,
            errors: AttitudeErrorState::default(),
        }
    }

    /// Clear the integral state (mode change).
    pub fn reset(&mut self) {
        self.errors.reset();
    }

    pub fn error_state(&self) -> &AttitudeErrorState {
        &self.errors
    }

    /// Run the full cascade once and update the integral error.
    ///
    /// Integration of the attitude error is skipped while the allocation
    /// clamps a rotor command at the ceiling (anti-windup).
    pub fn step(
        &mut self,
        state: &VehicleState,
        setpoint: &Setpoint,
        dt: f64,
        params: &VehicleParams,
    ) -> Result<CascadeOutput, Error> {
        let velocity_world = state.velocity_world();
        let rate_world = state.angular_velocity_world();

        let force_world = impedance_force(
            &state.position,
            &velocity_world,
            &rate_world,
            setpoint,
            &self.gains,
            params,
        );
        let roll = desired_roll(&force_world, setpoint.pitch, setpoint.yaw)?;
        let attitude_des = so3::from_rpy(roll, setpoint.pitch, setpoint.yaw);

        let (e_rot, e_rate) =
            attitude_errors(&state.attitude, &state.angular_velocity, &attitude_des, &setpoint.body_rate)?;
        let integral_before = self.errors.integral;
        self.errors.rotation = e_rot;
        self.errors.rate = e_rate;
        self.errors.integral += (e_rate + self.gains.integral_mix * e_rot) * dt;

        let torque = attitude_control(
            &self.errors,
            &state.attitude,
            &state.angular_velocity,
            state.plate_pos,
            &attitude_des,
            &setpoint.body_rate,
            &setpoint.body_rate_accel,
            &self.gains,
            params,
        )?;

        let (axial, vertical) = body_force_targets(&force_world, setpoint.pitch, setpoint.yaw);
        let tilt = tilt_angle(axial, vertical, torque.y, params)?;
        let allocation = allocate(&Vec3::new(axial, 0.0, vertical), &torque, tilt.angle, params)?;

        if allocation.speed_clamped {
            // Anti-windup: hold the integral while the ceiling is active.
            self.errors.integral = integral_before;
        }

        let saturation =
            std::array::from_fn(|i| allocation.command.rotor_speeds[i] / params.max_rotor_speed);
        Ok(CascadeOutput {
            command: allocation.command,
            desired_roll: roll,
            diagnostics: Diagnostics {
                position_error: state.position - setpoint.position,
                velocity_error: velocity_world - setpoint.velocity,
                attitude_error: e_rot,
                rate_error: e_rate,
                force_world,
                force_body: (axial, vertical),
                torque_body: torque,
                tilt,
                lambda_clamped: allocation.lambda_clamped,
                speed_clamped: allocation.speed_clamped,
                saturation,
            },
        })
    }
}
