//! Rotor thrust/drag model, body actuation wrench, allocation matrix and
//! actuator lag.
//!
//! Rotor layout (top view, x forward toward the end-effector, y left):
//!
//! ```text
//!        y
//!   2,7  |  1,6        front, fixed axes parallel to z
//!   -----+-----> x
//!   3,8  |  4,5        back, tilt together by `alpha` about y
//! ```
//!
//! Coaxial pairs share a corner: (1,6) front-right, (2,7) front-left,
//! (3,8) back-left, (4,5) back-right. Spin alternates with the index, so
//! each pair cancels its own drag torque at equal speeds. A positive tilt
//! pivots the back thrust axes toward +x.

use nalgebra::SMatrix;

use crate::vehicle::{Frame, VehicleParams, VehicleState, Wrench};
use crate::{Error, Vec3};

/// Allocation matrix shape: 6 wrench components x 8 rotor speed-squares.
pub type AllocationMatrix = SMatrix<f64, 6, 8>;

/// Per-rotor geometry: (front?, y sign, drag sign).
///
/// Index `i` holds rotor `i + 1`. Back rotors are the tiltable ones.
const ROTORS: [(bool, f64, f64); 8] = [
    (true, -1.0, -1.0),  // 1: front right, CCW pairing sign -
    (true, 1.0, 1.0),    // 2: front left
    (false, 1.0, -1.0),  // 3: back left
    (false, -1.0, 1.0),  // 4: back right
    (false, -1.0, -1.0), // 5: back right (coaxial with 4)
    (true, -1.0, 1.0),   // 6: front right (coaxial with 1)
    (true, 1.0, -1.0),   // 7: front left (coaxial with 2)
    (false, 1.0, 1.0),   // 8: back left (coaxial with 3)
];

/// Rotor-speed and tilt targets produced by the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorCommand {
    /// Rotor speed targets, rad/s.
    pub rotor_speeds: [f64; 8],
    /// Back-rotor tilt target, rad.
    pub tilt: f64,
}

impl RotorCommand {
    pub fn zero() -> Self {
        Self {
            rotor_speeds: [0.0; 8],
            tilt: 0.0,
        }
    }
}

/// First-order / rate-limit actuator models.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorDynamics {
    /// Rotor first-order time constant, s.
    pub rotor_tau: f64,
    /// Tilt-servo slew rate, rad/s.
    pub tilt_rate: f64,
    /// Plate slew rate, m/s.
    pub plate_rate: f64,
}

impl Default for ActuatorDynamics {
    fn default() -> Self {
        Self {
            rotor_tau: 0.05,
            tilt_rate: 2.0,
            plate_rate: 0.01,
        }
    }
}

impl ActuatorDynamics {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [
            ("rotor_tau", self.rotor_tau),
            ("tilt_rate", self.tilt_rate),
            ("plate_rate", self.plate_rate),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "actuator {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Which commands had to be clamped during an actuator update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActuatorClamps {
    pub rotor_speed: bool,
    pub tilt: bool,
    pub plate: bool,
}

impl ActuatorClamps {
    pub fn any(&self) -> bool {
        self.rotor_speed || self.tilt || self.plate
    }
}

/// Thrust of one rotor: `thrust_coeff * omega^2`.
pub fn rotor_thrust(omega: f64, params: &VehicleParams) -> Result<f64, Error> {
    if omega < 0.0 {
        return Err(Error::OutOfRange {
            quantity: "rotor speed",
            value: omega,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(params.thrust_coeff * omega * omega)
}

/// Drag torque of rotor `index` (1-based): `(-1)^index * drag_coeff * omega^2`.
pub fn rotor_drag_torque(index: usize, omega: f64, params: &VehicleParams) -> Result<f64, Error> {
    if !(1..=8).contains(&index) {
        return Err(Error::RotorIndex(index));
    }
    if omega < 0.0 {
        return Err(Error::OutOfRange {
            quantity: "rotor speed",
            value: omega,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(ROTORS[index - 1].2 * params.drag_coeff * omega * omega)
}

/// Body-frame actuation wrench for given rotor speeds and tilt.
///
/// Forces: the tilted back group contributes `sin(alpha)` along x and
/// `cos(alpha)` along z; the front group acts along z only. There is no
/// y-force authority. Torques combine the thrust moment arms with the drag
/// torques projected through the tilt.
pub fn actuation_wrench(rotor_speeds: &[f64; 8], tilt: f64, params: &VehicleParams) -> Wrench {
    let k = params.thrust_coeff;
    let thrust = |i: usize| k * rotor_speeds[i - 1] * rotor_speeds[i - 1];
    let drag = |i: usize| ROTORS[i - 1].2 * params.drag_coeff * rotor_speeds[i - 1].powi(2);

    let (s, c) = tilt.sin_cos();
    let t_back = thrust(3) + thrust(4) + thrust(5) + thrust(8);
    let t_front = thrust(1) + thrust(2) + thrust(6) + thrust(7);
    let drag_back = drag(3) + drag(4) + drag(5) + drag(8);
    let drag_front = drag(1) + drag(2) + drag(6) + drag(7);

    let force = Vec3::new(t_back * s, 0.0, t_back * c + t_front);

    let w = params.rotor_arm_y;
    let l = params.rotor_arm_x;
    let roll = (thrust(2) + thrust(7) - thrust(1) - thrust(6)
        + (thrust(3) + thrust(8) - thrust(4) - thrust(5)) * c)
        * w
        + drag_back * s;
    let pitch = t_back * c * l - t_front * l;
    let yaw = (thrust(4) + thrust(5) - thrust(3) - thrust(8)) * s * w + drag_back * c + drag_front;

    Wrench {
        force,
        torque: Vec3::new(roll, pitch, yaw),
        frame: Frame::Body,
    }
}

/// Allocation matrix `H(alpha)`: maps the eight rotor speed-squares to the
/// stacked body wrench `(F, Gamma)`.
///
/// Built column by column from the per-rotor geometry, so it serves as an
/// independent route against the grouped sums in [`actuation_wrench`].
/// Row 1 (the y-force) is identically zero, and because the back rotors
/// share one tilt axis and one arm, the pitch torque is tied to the force
/// split: `Gamma_2 = 2 L cot(alpha) F_x - L F_z`. The matrix therefore has
/// rank 4 at every tilt; the fifth degree of freedom only appears once the
/// tilt itself is treated as an input, which is why the tilt angle is
/// resolved before the pseudo-inverse.
pub fn allocation_matrix(tilt: f64, params: &VehicleParams) -> AllocationMatrix {
    let k = params.thrust_coeff;
    let b = params.drag_coeff;
    let l = params.rotor_arm_x;
    let w = params.rotor_arm_y;
    let (s, c) = tilt.sin_cos();

    let mut h = AllocationMatrix::zeros();
    for (col, &(front, y_sign, spin)) in ROTORS.iter().enumerate() {
        let y = y_sign * w;
        if front {
            h[(2, col)] = k;
            h[(3, col)] = y * k;
            h[(4, col)] = -l * k;
            h[(5, col)] = spin * b;
        } else {
            h[(0, col)] = k * s;
            h[(2, col)] = k * c;
            h[(3, col)] = y * k * c + spin * b * s;
            h[(4, col)] = l * k * c;
            h[(5, col)] = -y * k * s + spin * b * c;
        }
    }
    h
}

/// Advance rotor speeds, tilt and plate position toward their targets.
///
/// Rotor speeds relax with a first-order lag toward the clamped command;
/// tilt and plate slew at most `rate * dt`. All limits are enforced after
/// the update and clamping is reported, not treated as an error.
pub fn actuator_step(
    state: &mut VehicleState,
    command: &RotorCommand,
    plate_command: f64,
    dynamics: &ActuatorDynamics,
    dt: f64,
    params: &VehicleParams,
) -> ActuatorClamps {
    debug_assert!(dt > 0.0);
    let mut clamps = ActuatorClamps::default();

    let alpha = 1.0 - (-dt / dynamics.rotor_tau).exp();
    for (speed, &target) in state.rotor_speeds.iter_mut().zip(&command.rotor_speeds) {
        let clamped = target.clamp(0.0, params.max_rotor_speed);
        if clamped != target {
            clamps.rotor_speed = true;
        }
        *speed += (clamped - *speed) * alpha;
    }

    let tilt_target = command.tilt.clamp(params.tilt_min, params.tilt_max);
    if tilt_target != command.tilt {
        clamps.tilt = true;
    }
    let max_step = dynamics.tilt_rate * dt;
    state.tilt += (tilt_target - state.tilt).clamp(-max_step, max_step);

    let plate_target = plate_command.clamp(0.0, params.max_plate_travel);
    if plate_target != plate_command {
        clamps.plate = true;
    }
    let max_step = dynamics.plate_rate * dt;
    state.plate_pos += (plate_target - state.plate_pos).clamp(-max_step, max_step);

    clamps
}
