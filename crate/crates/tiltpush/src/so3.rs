//! Small SO(3) toolbox: hat/vee maps, elementary rotations, roll-pitch-yaw
//! composition and re-orthonormalization.
//!
//! Rotation matrices map body coordinates into world coordinates. Euler
//! angles follow the Z-Y-X (yaw-pitch-roll) convention, so
//! `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.

use crate::{Error, Mat3, Vec3};

/// Skew-symmetric (hat) map: `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Inverse of [`skew`] for an antisymmetric matrix.
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rotation about the x-axis.
pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation about the y-axis.
pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Rotation about the z-axis.
pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Z-Y-X Euler composition: `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Mat3 {
    rot_z(yaw) * rot_y(pitch) * rot_x(roll)
}

/// Extract (roll, pitch, yaw) from a rotation matrix, Z-Y-X convention.
///
/// At the pitch singularity (|pitch| = 90 deg) roll is folded into yaw.
pub fn to_rpy(r: &Mat3) -> (f64, f64, f64) {
    let sin_pitch = (-r[(2, 0)]).clamp(-1.0, 1.0);
    let pitch = sin_pitch.asin();
    if sin_pitch.abs() > 1.0 - 1e-12 {
        // Gimbal lock: only roll+yaw observable, attribute everything to yaw.
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]);
        (0.0, pitch, yaw)
    } else {
        let roll = r[(2, 1)].atan2(r[(2, 2)]);
        let yaw = r[(1, 0)].atan2(r[(0, 0)]);
        (roll, pitch, yaw)
    }
}

/// Maximum absolute entry of `R^T R - I`.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    let e = r.transpose() * r - Mat3::identity();
    e.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Check that `r` is a proper rotation within `tol`.
pub fn check_rotation(r: &Mat3, tol: f64) -> Result<(), Error> {
    let err = orthonormality_error(r);
    if err > tol || r.determinant() < 0.0 {
        return Err(Error::NotRotation(err));
    }
    Ok(())
}

/// Project a near-rotation back onto SO(3) (polar factor).
///
/// Newton iteration `R <- (R + R^-T) / 2` converges quadratically to the
/// orthogonal polar factor; two or three sweeps reduce integration drift of
/// order 1e-6 below 1e-15.
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let mut q = *r;
    for _ in 0..4 {
        let inv_t = match q.try_inverse() {
            Some(inv) => inv.transpose(),
            None => return gram_schmidt(r),
        };
        q = 0.5 * (q + inv_t);
        if orthonormality_error(&q) < 1e-15 {
            break;
        }
    }
    q
}

fn gram_schmidt(r: &Mat3) -> Mat3 {
    let x = r.column(0).normalize();
    let mut y = r.column(1).into_owned();
    y -= x * x.dot(&y);
    let y = y.normalize();
    let z = x.cross(&y);
    Mat3::from_columns(&[x, Vec3::from(y), z])
}
