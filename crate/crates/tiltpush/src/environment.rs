//! Vertical work surface and compliant end-effector contact.
//!
//! The wall is an infinite plane with a unit outward normal pointing back
//! toward the vehicle. Contact acts only at the end-effector tip: a
//! unilateral spring-damper along the normal plus velocity-regularized
//! Coulomb friction in the tangent plane. The resulting wrench is expressed
//! in the body frame about the body origin.

use serde::{Deserialize, Serialize};

use crate::vehicle::{Frame, VehicleParams, VehicleState, Wrench};
use crate::{Error, Mat3, Vec3};

/// Plane wall with contact constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WallModel {
    /// A point on the wall plane, world frame, m.
    pub point: Vec3,
    /// Unit outward normal, pointing toward the vehicle.
    pub normal: Vec3,
    /// End-effector normal stiffness, N/m.
    pub stiffness: f64,
    /// Normal damping (compression only), N s/m.
    pub damping: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Viscous slope of the regularized friction law, N s/m.
    pub tangent_gain: f64,
}

impl Default for WallModel {
    fn default() -> Self {
        Self {
            point: Vec3::new(1.0, 0.0, 1.0),
            normal: Vec3::new(-1.0, 0.0, 0.0),
            stiffness: 1500.0,
            damping: 50.0,
            friction: 1.0,
            tangent_gain: 200.0,
        }
    }
}

impl WallModel {
    pub fn validate(&self) -> Result<(), Error> {
        if (self.normal.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "wall normal must be a unit vector, |n| = {}",
                self.normal.norm()
            )));
        }
        for (name, v) in [
            ("stiffness", self.stiffness),
            ("damping", self.damping),
            ("friction", self.friction),
            ("tangent_gain", self.tangent_gain),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "wall {name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Evaluated contact state, returned alongside the wrench for telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// Body-frame wrench applied to the vehicle.
    pub wrench: Wrench,
    /// End-effector compression along the normal, m (0 when separated).
    pub penetration: f64,
    /// Normal force magnitude pressed into the wall, N.
    pub normal_force: f64,
    /// Tangential (friction) force magnitude, N.
    pub tangent_force: f64,
}

impl Contact {
    pub fn none() -> Self {
        Self {
            wrench: Wrench::zero(Frame::Body),
            penetration: 0.0,
            normal_force: 0.0,
            tangent_force: 0.0,
        }
    }

    pub fn in_contact(&self) -> bool {
        self.penetration > 0.0
    }
}

/// World position of the end-effector tip.
pub fn ee_tip_position(state: &VehicleState, params: &VehicleParams) -> Vec3 {
    state.position + state.attitude * Vec3::new(params.ee_offset, 0.0, 0.0)
}

/// World velocity of the end-effector tip (rigid-body kinematics).
pub fn ee_tip_velocity(state: &VehicleState, params: &VehicleParams) -> Vec3 {
    let arm_world = state.attitude * Vec3::new(params.ee_offset, 0.0, 0.0);
    state.velocity_world() + state.angular_velocity_world().cross(&arm_world)
}

/// Contact wrench of the wall on the vehicle, body frame.
pub fn contact_wrench(state: &VehicleState, wall: &WallModel, params: &VehicleParams) -> Contact {
    contact_at(
        &state.position,
        &state.attitude,
        &state.velocity_world(),
        &state.angular_velocity_world(),
        wall,
        params,
    )
}

/// Contact evaluation on raw rigid-body quantities (used inside the
/// integrator where no full [`VehicleState`] exists).
pub fn contact_at(
    position: &Vec3,
    attitude: &Mat3,
    velocity_world: &Vec3,
    angular_velocity_world: &Vec3,
    wall: &WallModel,
    params: &VehicleParams,
) -> Contact {
    let arm_body = Vec3::new(params.ee_offset, 0.0, 0.0);
    let arm_world = attitude * arm_body;
    let tip = position + arm_world;

    let gap = (tip - wall.point).dot(&wall.normal);
    let penetration = (-gap).max(0.0);
    if penetration <= 0.0 {
        return Contact::none();
    }

    let tip_velocity = velocity_world + angular_velocity_world.cross(&arm_world);
    let normal_rate = tip_velocity.dot(&wall.normal);

    // Unilateral: spring plus compression-only damping, never adhesive.
    let normal_force = wall.stiffness * penetration + wall.damping * (-normal_rate).max(0.0);
    let mut force_world = normal_force * wall.normal;

    // Regularized Coulomb friction: viscous at small slip, capped at mu*N.
    let tangent_velocity = tip_velocity - normal_rate * wall.normal;
    let slip = tangent_velocity.norm();
    let mut tangent_force = 0.0;
    if slip > 1e-12 {
        tangent_force = (wall.tangent_gain * slip).min(wall.friction * normal_force);
        force_world -= tangent_force * tangent_velocity / slip;
    }

    let force_body = attitude.transpose() * force_world;
    let torque_body = arm_body.cross(&force_body);
    Contact {
        wrench: Wrench {
            force: force_body,
            torque: torque_body,
            frame: Frame::Body,
        },
        penetration,
        normal_force,
        tangent_force,
    }
}
