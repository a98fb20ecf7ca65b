//! Physical parameters, kinematic state and the CoM-dependent gravity model.
//!
//! The body frame sits at the geometric center of the rotor layout, x toward
//! the end-effector (the interaction axis), y left, z up. The center of mass
//! moves along body x when the shifting plate slides: a plate position `l`
//! displaces the CoM by `d = (plate_mass / mass) * l`. Gravity then enters
//! the rotational dynamics through the moment arm `(d, 0, 0)`.

use serde::{Deserialize, Serialize};

use crate::so3;
use crate::{Error, Mat3, Vec3};

/// Coordinate frame tag for a [`Wrench`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Body,
    World,
}

/// A force/torque pair expressed in a tagged frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
    pub frame: Frame,
}

impl Wrench {
    pub fn zero(frame: Frame) -> Self {
        Self {
            force: Vec3::zeros(),
            torque: Vec3::zeros(),
            frame,
        }
    }
}

/// Physical constants of the platform.
///
/// Defaults reproduce the reference vehicle: a 3.12 kg H-frame coaxial
/// octocopter with a 0.90 kg shifting plate, tiltable back rotors and a
/// compliant tip 0.318 m ahead of the geometric center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Total mass, kg.
    pub mass: f64,
    /// Shifting-plate mass, kg.
    pub plate_mass: f64,
    /// Geometric-center-to-rotor distance along body x, m.
    pub rotor_arm_x: f64,
    /// Geometric-center-to-rotor distance along body y, m.
    pub rotor_arm_y: f64,
    /// Guiding-frame length, m.
    pub frame_length: f64,
    /// Shifting-plate length along body x, m.
    pub plate_length: f64,
    /// Rotor thrust coefficient, N s^2 / rad^2.
    pub thrust_coeff: f64,
    /// Rotor drag-torque coefficient, N m s^2 / rad^2.
    pub drag_coeff: f64,
    /// Roll inertia, kg m^2 (independent of the plate position).
    pub roll_inertia: f64,
    /// Pitch inertia quadratic coefficient, kg m^2 / m^2.
    pub pitch_inertia_quad: f64,
    /// Pitch inertia at plate position zero, kg m^2.
    pub pitch_inertia_base: f64,
    /// Yaw inertia quadratic coefficient, kg m^2 / m^2.
    pub yaw_inertia_quad: f64,
    /// Yaw inertia at plate position zero, kg m^2.
    pub yaw_inertia_base: f64,
    /// Gravitational acceleration magnitude, m/s^2.
    pub gravity: f64,
    /// Rotor speed ceiling, rad/s.
    pub max_rotor_speed: f64,
    /// Back-rotor tilt limits, rad.
    pub tilt_min: f64,
    pub tilt_max: f64,
    /// Plate travel ceiling, m.
    pub max_plate_travel: f64,
    /// End-effector tip offset along body x from the geometric center, m.
    pub ee_offset: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        let thrust_coeff = 1.156e-5;
        Self {
            mass: 3.12,
            plate_mass: 0.90,
            rotor_arm_x: 0.138,
            rotor_arm_y: 0.225,
            frame_length: 0.180,
            plate_length: 0.200,
            thrust_coeff,
            drag_coeff: 0.0277 * thrust_coeff,
            roll_inertia: 0.0444,
            pitch_inertia_quad: 0.49,
            pitch_inertia_base: 0.0538,
            yaw_inertia_quad: 0.52,
            yaw_inertia_base: 0.0795,
            gravity: 9.81,
            max_rotor_speed: 1150.7,
            tilt_min: -std::f64::consts::FRAC_PI_2,
            tilt_max: std::f64::consts::FRAC_PI_2,
            max_plate_travel: 0.18,
            // Tip of the guiding frame: rotor arm plus frame length.
            ee_offset: 0.138 + 0.180,
        }
    }
}

impl VehicleParams {
    /// Check the model invariants.
    pub fn validate(&self) -> Result<(), Error> {
        let positive = [
            ("mass", self.mass),
            ("plate_mass", self.plate_mass),
            ("rotor_arm_x", self.rotor_arm_x),
            ("rotor_arm_y", self.rotor_arm_y),
            ("frame_length", self.frame_length),
            ("plate_length", self.plate_length),
            ("thrust_coeff", self.thrust_coeff),
            ("drag_coeff", self.drag_coeff),
            ("roll_inertia", self.roll_inertia),
            ("pitch_inertia_quad", self.pitch_inertia_quad),
            ("pitch_inertia_base", self.pitch_inertia_base),
            ("yaw_inertia_quad", self.yaw_inertia_quad),
            ("yaw_inertia_base", self.yaw_inertia_base),
            ("gravity", self.gravity),
            ("max_rotor_speed", self.max_rotor_speed),
            ("ee_offset", self.ee_offset),
        ];
        for (name, value) in positive {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        if self.plate_mass >= self.mass {
            return Err(Error::InvalidParams(format!(
                "plate_mass ({}) must be smaller than mass ({})",
                self.plate_mass, self.mass
            )));
        }
        let com_at_max = self.plate_mass / self.mass * self.max_plate_travel;
        if com_at_max > self.rotor_arm_x {
            return Err(Error::InvalidParams(format!(
                "max_plate_travel ({}) would move the CoM {com_at_max:.4} m forward, \
                 outside the rotor-defined area ({} m): over-displacement",
                self.max_plate_travel, self.rotor_arm_x
            )));
        }
        let travel_bound = self.rotor_arm_x + self.frame_length - 0.5 * self.plate_length;
        if self.max_plate_travel < 0.0 || self.max_plate_travel > travel_bound {
            return Err(Error::InvalidParams(format!(
                "max_plate_travel ({}) exceeds the guiding-frame bound {travel_bound:.4}",
                self.max_plate_travel
            )));
        }
        let half_pi = std::f64::consts::FRAC_PI_2 + 1e-12;
        if self.tilt_min > self.tilt_max || self.tilt_min < -half_pi || self.tilt_max > half_pi {
            return Err(Error::InvalidParams(format!(
                "tilt range [{}, {}] must be inside [-pi/2, pi/2]",
                self.tilt_min, self.tilt_max
            )));
        }
        Ok(())
    }

    /// Weight force magnitude, N.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Rotor speed at which eight equal rotors carry the weight, rad/s.
    pub fn hover_speed(&self) -> f64 {
        (self.weight() / (8.0 * self.thrust_coeff)).sqrt()
    }

    fn check_plate_range(&self, plate_pos: f64) -> Result<(), Error> {
        if !(0.0..=self.max_plate_travel).contains(&plate_pos) {
            return Err(Error::OutOfRange {
                quantity: "plate position",
                value: plate_pos,
                min: 0.0,
                max: self.max_plate_travel,
            });
        }
        Ok(())
    }
}

/// Full kinematic + actuator state of the vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    /// World position of the body-frame origin, m.
    pub position: Vec3,
    /// Rotation body -> world.
    pub attitude: Mat3,
    /// Body-frame linear velocity, m/s.
    pub velocity: Vec3,
    /// Body-frame angular velocity, rad/s.
    pub angular_velocity: Vec3,
    /// Shifting-plate position along body x, m.
    pub plate_pos: f64,
    /// Current back-rotor tilt, rad.
    pub tilt: f64,
    /// Rotor speeds, rad/s.
    pub rotor_speeds: [f64; 8],
}

impl VehicleState {
    /// Resting state at a pose, rotors off.
    pub fn at_rest(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            attitude: so3::rot_z(yaw),
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            plate_pos: 0.0,
            tilt: 0.0,
            rotor_speeds: [0.0; 8],
        }
    }

    /// Level hover equilibrium: all rotors at hover speed, zero tilt.
    pub fn hover(position: Vec3, yaw: f64, params: &VehicleParams) -> Self {
        let mut state = Self::at_rest(position, yaw);
        state.rotor_speeds = [params.hover_speed(); 8];
        state
    }

    /// Verify the state invariants against `params`.
    pub fn validate(&self, params: &VehicleParams) -> Result<(), Error> {
        so3::check_rotation(&self.attitude, 1e-9)?;
        for (i, &omega) in self.rotor_speeds.iter().enumerate() {
            if !(0.0..=params.max_rotor_speed).contains(&omega) {
                return Err(Error::OutOfRange {
                    quantity: ROTOR_SPEED_NAMES[i],
                    value: omega,
                    min: 0.0,
                    max: params.max_rotor_speed,
                });
            }
        }
        if !(params.tilt_min..=params.tilt_max).contains(&self.tilt) {
            return Err(Error::OutOfRange {
                quantity: "tilt",
                value: self.tilt,
                min: params.tilt_min,
                max: params.tilt_max,
            });
        }
        params.check_plate_range(self.plate_pos)?;
        let finite = self.position.iter().chain(self.velocity.iter()).chain(
            self.angular_velocity.iter(),
        );
        for v in finite {
            if !v.is_finite() {
                return Err(Error::NonFinite("vehicle state"));
            }
        }
        Ok(())
    }

    /// World-frame linear velocity.
    pub fn velocity_world(&self) -> Vec3 {
        self.attitude * self.velocity
    }

    /// World-frame angular velocity.
    pub fn angular_velocity_world(&self) -> Vec3 {
        self.attitude * self.angular_velocity
    }
}

const ROTOR_SPEED_NAMES: [&str; 8] = [
    "rotor speed 1",
    "rotor speed 2",
    "rotor speed 3",
    "rotor speed 4",
    "rotor speed 5",
    "rotor speed 6",
    "rotor speed 7",
    "rotor speed 8",
];

/// CoM displacement along body x produced by a plate position.
///
/// `d = (plate_mass / mass) * l`, valid for `0 <= l <= max_plate_travel`.
pub fn com_displacement(plate_pos: f64, params: &VehicleParams) -> Result<f64, Error> {
    params.check_plate_range(plate_pos)?;
    Ok(params.plate_mass / params.mass * plate_pos)
}

/// Diagonal inertia matrix at a plate position.
///
/// Roll inertia is constant; pitch and yaw grow quadratically with the
/// plate position (regressed from the CAD model).
pub fn inertia_matrix(plate_pos: f64, params: &VehicleParams) -> Result<Mat3, Error> {
    params.check_plate_range(plate_pos)?;
    let l2 = plate_pos * plate_pos;
    Ok(Mat3::from_diagonal(&Vec3::new(
        params.roll_inertia,
        params.pitch_inertia_quad * l2 + params.pitch_inertia_base,
        params.yaw_inertia_quad * l2 + params.yaw_inertia_base,
    )))
}

/// Gravity wrench in the body frame, about the body origin.
///
/// Force is the weight rotated into the body frame; torque is the moment of
/// the weight about the origin with the CoM offset `(d, 0, 0)` as arm. The
/// convention is the applied wrench: level hover needs `+weight` of body
/// thrust along z to cancel it.
pub fn gravity_wrench(attitude: &Mat3, plate_pos: f64, params: &VehicleParams) -> Wrench {
    let force = attitude.transpose() * Vec3::new(0.0, 0.0, -params.weight());
    let offset = params.plate_mass / params.mass * plate_pos;
    let torque = Vec3::new(offset, 0.0, 0.0).cross(&force);
    Wrench {
        force,
        torque,
        frame: Frame::Body,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn default_params_are_valid() {
        params().validate().unwrap();
    }

    #[test]
    fn com_displacement_zero_and_max() {
        let p = params();
        assert_eq!(com_displacement(0.0, &p).unwrap(), 0.0);
        // Full travel: d = 0.90 / 3.12 * 0.18.
        let d = com_displacement(0.18, &p).unwrap();
        assert_relative_eq!(d, 0.90 / 3.12 * 0.18, epsilon = 1e-15);
        assert_relative_eq!(d, 0.051923, epsilon = 1e-6);
        assert!(d <= p.rotor_arm_x);
    }

    #[test]
    fn com_displacement_rejects_over_travel() {
        let p = params();
        // The plate position that would put the CoM on the rotor line is
        // (mass / plate_mass) * arm = 0.4784 m, far beyond the travel limit.
        let l_flip = p.mass / p.plate_mass * p.rotor_arm_x;
        assert_relative_eq!(l_flip, 0.4784, epsilon = 1e-4);
        // The bare formula would give d = arm there; the operation refuses it.
        assert_relative_eq!(p.plate_mass / p.mass * l_flip, p.rotor_arm_x, epsilon = 1e-12);
        match com_displacement(l_flip, &p) {
            Err(Error::OutOfRange { max, .. }) => assert_relative_eq!(max, 0.18),
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(com_displacement(-0.01, &p).is_err());
    }

    #[test]
    fn com_displacement_is_linear() {
        let p = params();
        let d_full = com_displacement(0.18, &p).unwrap();
        for k in 0..=10 {
            let a = k as f64 / 10.0;
            let d = com_displacement(a * 0.18, &p).unwrap();
            assert_relative_eq!(d, a * d_full, epsilon = 1e-15);
        }
    }

    #[test]
    fn inertia_matrix_reference_values() {
        let p = params();
        let i0 = inertia_matrix(0.0, &p).unwrap();
        assert_eq!(i0[(0, 0)], 0.0444);
        assert_eq!(i0[(1, 1)], 0.0538);
        assert_eq!(i0[(2, 2)], 0.0795);

        let i_full = inertia_matrix(0.18, &p).unwrap();
        assert_relative_eq!(i_full[(0, 0)], 0.0444, epsilon = 1e-15);
        assert_relative_eq!(i_full[(1, 1)], 0.069676, epsilon = 1e-12);
        assert_relative_eq!(i_full[(2, 2)], 0.096348, epsilon = 1e-12);
    }

    #[test]
    fn inertia_monotone_and_positive() {
        let p = params();
        let mut prev = inertia_matrix(0.0, &p).unwrap();
        for k in 1..=20 {
            let l = 0.18 * k as f64 / 20.0;
            let i = inertia_matrix(l, &p).unwrap();
            assert!(i[(1, 1)] > prev[(1, 1)]);
            assert!(i[(2, 2)] > prev[(2, 2)]);
            assert_eq!(i[(0, 0)], prev[(0, 0)]);
            for d in 0..3 {
                assert!(i[(d, d)] > 0.0);
            }
            prev = i;
        }
    }

    #[test]
    fn gravity_wrench_level_cases() {
        let p = params();
        let w0 = gravity_wrench(&Mat3::identity(), 0.0, &p);
        assert_relative_eq!(w0.force, Vec3::new(0.0, 0.0, -30.6072), epsilon = 1e-10);
        assert_eq!(w0.torque, Vec3::zeros());
        assert_eq!(w0.frame, Frame::Body);

        // Plate fully forward: pitch-down moment d * m * g about +y.
        let w = gravity_wrench(&Mat3::identity(), 0.18, &p);
        let d = com_displacement(0.18, &p).unwrap();
        assert_relative_eq!(w.torque, Vec3::new(0.0, d * p.weight(), 0.0), epsilon = 1e-12);
        assert_relative_eq!(w.torque.y, 1.58922, epsilon = 1e-4);
    }

    #[test]
    fn gravity_wrench_norm_and_zero_arm() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let r = so3::from_rpy(
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-3.1..3.1),
            );
            let w = gravity_wrench(&r, 0.0, &p);
            // Rotation preserves the weight magnitude; no arm, no torque.
            assert_relative_eq!(w.force.norm(), p.weight(), epsilon = 1e-9);
            assert_relative_eq!(w.torque.norm(), 0.0, epsilon = 1e-12);

            // With the arm along body x the torque has no x-component.
            let w = gravity_wrench(&r, 0.18, &p);
            assert_relative_eq!(w.torque.x, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn params_reject_com_over_displacement() {
        let mut p = params();
        p.max_plate_travel = 0.5;
        // (0.90 / 3.12) * 0.5 = 0.144 m > rotor_arm_x = 0.138 m.
        assert!(p.validate().is_err());
    }

    #[test]
    fn state_validation_catches_violations() {
        let p = params();
        let mut s = VehicleState::hover(Vec3::zeros(), 0.0, &p);
        s.validate(&p).unwrap();

        s.rotor_speeds[3] = p.max_rotor_speed + 1.0;
        assert!(s.validate(&p).is_err());
        s.rotor_speeds[3] = 0.0;

        s.attitude[(0, 0)] = 1.5;
        assert!(matches!(s.validate(&p), Err(Error::NotRotation(_))));
    }
}
