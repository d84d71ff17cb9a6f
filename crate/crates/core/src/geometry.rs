//! Camera placement and pinhole projection.
//!
//! World frame: +z is up. A camera pose is a point on a sphere around the
//! focus point; the polar angle is measured from +z.

use nalgebra::{Matrix3, Point2, Vector3};

use crate::distraction::camera::{offset_to_spherical, spherical_offset};
use crate::distraction::CameraState;
use crate::error::{Error, Result};

pub const DEFAULT_FOV: f64 = std::f64::consts::PI / 4.0;

/// Near clipping distance in scene units.
pub const NEAR: f64 = 1e-3;

pub fn world_up() -> Vector3<f64> {
    Vector3::z()
}

/// Used when the viewing direction is parallel to [`world_up`].
pub fn fallback_up() -> Vector3<f64> {
    Vector3::x()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FocusKind {
    /// Follows the agent every frame.
    Tracking,
    /// Looks at the agent's position at the start of the episode.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusMode {
    pub kind: FocusKind,
    pub focus_point: Vector3<f64>,
}

impl FocusMode {
    pub fn new(kind: FocusKind, start: Vector3<f64>) -> Self {
        FocusMode { kind, focus_point: start }
    }

    /// Episode start: both modes take the agent position.
    pub fn reset(&mut self, agent: Vector3<f64>) {
        self.focus_point = agent;
    }

    pub fn update(&mut self, agent: Vector3<f64>) {
        if self.kind == FocusKind::Tracking {
            self.focus_point = agent;
        }
    }
}

pub fn spherical_to_cartesian(pose: &CameraState, focus: Vector3<f64>, r_original: f64) -> Vector3<f64> {
    focus + spherical_offset(pose.phi, pose.theta, pose.r * r_original)
}

/// Returns `(phi, theta, r)` with `r` in units of `r_original`.
pub fn cartesian_to_spherical(
    position: Vector3<f64>,
    focus: Vector3<f64>,
    r_original: f64,
) -> (f64, f64, f64) {
    let (phi, theta, r) = offset_to_spherical(&(position - focus), 0.0);
    (phi, theta, r / r_original)
}

/// Camera frame. `rotation` maps world directions into camera coordinates
/// whose axes are (right, up, back); it is a proper rotation, and the
/// viewing direction is the negated third row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraExtrinsics {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub fov: f64,
}

impl CameraExtrinsics {
    pub fn right(&self) -> Vector3<f64> {
        self.rotation.row(0).transpose()
    }

    pub fn up(&self) -> Vector3<f64> {
        self.rotation.row(1).transpose()
    }

    pub fn forward(&self) -> Vector3<f64> {
        -self.rotation.row(2).transpose()
    }

    /// World point to camera coordinates (x right, y up, z back).
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.position)
    }

    /// Focal length in pixels for an image of the given height.
    pub fn focal_px(&self, height: usize) -> f64 {
        height as f64 / 2.0 / (self.fov / 2.0).tan()
    }

    /// Turns the camera around to face directly away from where it looked.
    pub fn reversed(&self) -> Self {
        let mut rotation = self.rotation;
        for c in 0..3 {
            rotation[(0, c)] = -rotation[(0, c)];
            rotation[(2, c)] = -rotation[(2, c)];
        }
        CameraExtrinsics { rotation, ..*self }
    }
}

pub fn look_at_with_roll(
    position: Vector3<f64>,
    focus: Vector3<f64>,
    roll: f64,
    fov: f64,
) -> Result<CameraExtrinsics> {
    let dir = focus - position;
    let dist = dir.norm();
    if dist < 1e-9 {
        return Err(Error::DegenerateGeometry(format!(
            "camera position {position:?} coincides with focus"
        )));
    }
    let forward = dir / dist;
    let mut up_ref = world_up();
    if forward.cross(&up_ref).norm() < 1e-9 {
        up_ref = fallback_up();
    }
    let right0 = forward.cross(&up_ref).normalize();
    let up0 = right0.cross(&forward);
    let (s, c) = roll.sin_cos();
    let up = up0 * c + right0 * s;
    let right = right0 * c - up0 * s;
    let back = -forward;
    let rotation = Matrix3::from_rows(&[right.transpose(), up.transpose(), back.transpose()]);
    Ok(CameraExtrinsics { position, rotation, fov })
}

/// Projects a world point to continuous pixel coordinates, origin at the
/// top-left image corner. Points within [`NEAR`] of the camera plane or
/// behind it return `None`.
pub fn project(ext: &CameraExtrinsics, point: &Vector3<f64>, size: (usize, usize)) -> Option<Point2<f64>> {
    let c = ext.to_camera(point);
    let depth = -c.z;
    if depth <= NEAR {
        return None;
    }
    let (w, h) = size;
    let f = ext.focal_px(h);
    Some(Point2::new(
        w as f64 / 2.0 + f * c.x / depth,
        h as f64 / 2.0 - f * c.y / depth,
    ))
}
