//! Rigid-body simulation and cascade control for a small over-actuated
//! multirotor that presses its end-effector against vertical surfaces.
//!
//! The modeled vehicle is an H-shaped coaxial octocopter with two twists on
//! the classic layout:
//!
//! * the four back rotors tilt together about the body y-axis, giving the
//!   platform a thrust component along the body x-axis (the interaction
//!   axis), and
//! * a heavy plate slides along a guiding frame on the body x-axis, moving
//!   the center of mass toward the work surface during contact.
//!
//! The crate provides:
//!
//! * [`vehicle`] — physical parameters, kinematic state, shifting-mass
//!   kinematics, position-dependent inertia and the gravity wrench;
//! * [`actuation`] — rotor thrust/drag models, the body actuation wrench,
//!   the configuration-dependent allocation matrix and actuator lag;
//! * [`control`] — the cascade controller: selective impedance (outer loop),
//!   geometric attitude control on SO(3) (inner loop), tilt-angle resolution
//!   and pseudo-inverse allocation;
//! * [`environment`] — a compliant wall-contact model (spring-damper normal
//!   force, regularized Coulomb friction);
//! * [`sim`] — fixed-step RK4 closed-loop integration, scenario scheduling
//!   and telemetry capture;
//! * [`config`] — a TOML scenario format with built-in pushing-task
//!   templates and dotted-key overrides.
//!
//! A narrative guide with runnable snippets lives in `book/`; the snippets
//! are compiled as doctests (see [`book`]).

pub mod actuation;
pub mod config;
pub mod control;
pub mod environment;
mod error;
pub mod sim;
pub mod so3;
pub mod vehicle;

#[cfg(doctest)]
mod book;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrix alias, used for rotations, inertia and gain matrices.
pub type Mat3 = nalgebra::Matrix3<f64>;
