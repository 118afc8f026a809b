//! Target kinematics and the bearing-based camera projection.

use crate::angle_map::{BoundingBox, CameraModel};

use super::scenario::{TargetSize, Trajectory};

/// World position in metres: x right, y down, z forward from the mount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPos {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPos {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Point at `bearing_deg` (positive right) and `range_m` on the horizon.
    pub fn at_bearing(bearing_deg: f64, range_m: f64) -> Self {
        let b = bearing_deg.to_radians();
        Self::new(range_m * b.sin(), 0.0, range_m * b.cos())
    }

    pub fn range(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Current pointing direction of the mount, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    /// Positive when the camera looks right of the initial axis.
    pub pan_right_deg: f64,
    /// Positive when the camera looks below the initial axis.
    pub tilt_down_deg: f64,
}

/// Outcome of projecting a target into the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    InFrame { x_px: f64, y_px: f64 },
    OutOfFrame,
}

/// Wraps an angle into `(−180°, 180°]`.
fn wrap_deg(a: f64) -> f64 {
    let r = (a + 180.0).rem_euclid(360.0) - 180.0;
    if r == -180.0 {
        180.0
    } else {
        r
    }
}

/// Bearing of a world point relative to the current pose, degrees
/// `(horizontal, vertical)`.
pub fn relative_bearing(pos: &WorldPos, pose: &Pose) -> (f64, f64) {
    let az = pos.x.atan2(pos.z).to_degrees();
    let el = pos.y.atan2(pos.x.hypot(pos.z)).to_degrees();
    (wrap_deg(az - pose.pan_right_deg), el - pose.tilt_down_deg)
}

/// Maps bearings linearly onto pixels through the field of view:
/// `x = w/2 + (bearing/θx)·w`. Anything beyond half the field of view, or
/// behind the camera, is out of frame.
pub fn project_target(pos: &WorldPos, pose: &Pose, cam: &CameraModel) -> Projection {
    let (rel_h, rel_v) = relative_bearing(pos, pose);
    if rel_h.abs() >= 90.0 || rel_h.abs() > cam.fov_h_deg / 2.0 || rel_v.abs() > cam.fov_v_deg / 2.0 {
        return Projection::OutOfFrame;
    }
    Projection::InFrame {
        x_px: cam.width_px / 2.0 + rel_h / cam.fov_h_deg * cam.width_px,
        y_px: cam.height_px / 2.0 + rel_v / cam.fov_v_deg * cam.height_px,
    }
}

/// Ground-truth image box of a target of physical `size` whose center
/// projects to `(x_px, y_px)`.
pub fn target_box(x_px: f64, y_px: f64, pos: &WorldPos, size: &TargetSize, cam: &CameraModel) -> BoundingBox {
    let range = pos.range();
    let ang_w = 2.0 * (size.width_m / 2.0).atan2(range).to_degrees();
    let ang_h = 2.0 * (size.height_m / 2.0).atan2(range).to_degrees();
    BoundingBox::new(x_px, y_px, ang_w / cam.fov_h_deg * cam.width_px, ang_h / cam.fov_v_deg * cam.height_px)
}

impl Trajectory {
    /// Target position at time `t`.
    pub fn position(&self, t: f64, cam: &CameraModel) -> WorldPos {
        match *self {
            Trajectory::LinearPass { depth_m, speed_m_s, start_x_m } => {
                let x0 = start_x_m.unwrap_or_else(|| -depth_m * (cam.fov_h_deg / 2.0 + 2.0).to_radians().tan());
                WorldPos::new(x0 + speed_m_s * t, 0.0, depth_m)
            }
            Trajectory::Accelerating { accel_m_s2, end_m, depth_m, start_s } => {
                let tau = (t - start_s).max(0.0);
                WorldPos::new((0.5 * accel_m_s2 * tau * tau).min(end_m), 0.0, depth_m)
            }
            Trajectory::Step { offset_deg, depth_m } => WorldPos::at_bearing(offset_deg, depth_m),
            Trajectory::Occlusion { end_s, bearing_deg, reappear_bearing_deg, depth_m, .. } => {
                let b = if t < end_s { bearing_deg } else { reappear_bearing_deg };
                WorldPos::at_bearing(b, depth_m)
            }
        }
    }

    /// `false` while an occluder hides the target.
    pub fn visible(&self, t: f64) -> bool {
        match *self {
            Trajectory::Occlusion { start_s, end_s, .. } => !(start_s..end_s).contains(&t),
            _ => true,
        }
    }
}
