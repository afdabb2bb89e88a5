use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion, Vector3};

use super::RenderError;
use crate::assets::CameraDefaults;

/// Pinhole camera. Camera space follows the x-right, y-down, z-forward
/// convention; world space is z-up.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
    pub world_to_camera: Isometry3<f64>,
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        near: f64,
        far: f64,
        world_to_camera: Isometry3<f64>,
    ) -> Result<Self, RenderError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(RenderError::Contract(format!("focal lengths must be positive ({fx}, {fy})")));
        }
        if !(near > 0.0 && near < far) {
            return Err(RenderError::Contract(format!("need 0 < near < far, got {near}, {far}")));
        }
        if width == 0 || height == 0 {
            return Err(RenderError::Contract("image size must be at least 1x1".into()));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            near,
            far,
            world_to_camera,
        })
    }

    pub fn from_defaults(d: &CameraDefaults, world_to_camera: Isometry3<f64>) -> Result<Self, RenderError> {
        let (fx, fy, cx, cy) = d.intrinsics();
        Self::new(fx, fy, cx, cy, d.width, d.height, d.near, d.far, world_to_camera)
    }

    /// Camera at the agent's sensor height looking horizontally along
    /// `heading` (radians, counter-clockwise from +x).
    pub fn agent_mounted(d: &CameraDefaults, x: f64, y: f64, heading: f64) -> Result<Self, RenderError> {
        let eye = Vector3::new(x, y, d.mount_height);
        let forward = Vector3::new(heading.cos(), heading.sin(), 0.0);
        Self::from_defaults(d, look_along(&eye, &forward))
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        self.world_to_camera.inverse().translation.vector
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// World-to-camera transform for a camera at `eye` looking along `forward`
/// with world +z as up.
pub fn look_along(eye: &Vector3<f64>, forward: &Vector3<f64>) -> Isometry3<f64> {
    let f = forward.normalize();
    let up = if f.z.abs() > 0.999 { Vector3::x() } else { Vector3::z() };
    let right = f.cross(&up).normalize();
    let down = f.cross(&right);
    let r = Matrix3::from_rows(&[right.transpose(), down.transpose(), f.transpose()]);
    let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let t = -(rot * eye);
    Isometry3::from_parts(Translation3::from(t), rot)
}

/// World-to-camera transform looking from `eye` toward `target`.
pub fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>) -> Isometry3<f64> {
    look_along(eye, &(target - eye))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_maps_to_plus_z() {
        let iso = look_along(&Vector3::new(1.0, 2.0, 1.5), &Vector3::x());
        let p = iso * nalgebra::Point3::new(3.0, 2.0, 1.5);
        assert!((p.coords - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        // +y in world is to the left, i.e. negative camera x.
        let left = iso * nalgebra::Point3::new(1.0, 3.0, 1.5);
        assert!(left.x < 0.0);
        // world up is camera -y.
        let up = iso * nalgebra::Point3::new(1.0, 2.0, 2.5);
        assert!(up.y < 0.0);
    }

    #[test]
    fn invalid_intrinsics_rejected() {
        let iso = Isometry3::identity();
        assert!(Camera::new(0.0, 1.0, 0.0, 0.0, 4, 4, 0.1, 10.0, iso).is_err());
        assert!(Camera::new(1.0, 1.0, 0.0, 0.0, 4, 4, 1.0, 1.0, iso).is_err());
        assert!(Camera::new(1.0, 1.0, 0.0, 0.0, 0, 4, 0.1, 1.0, iso).is_err());
    }

    #[test]
    fn center_round_trip() {
        let eye = Vector3::new(-2.0, 0.5, 1.0);
        let cam = Camera::new(1.0, 1.0, 0.0, 0.0, 1, 1, 0.1, 10.0, look_at(&eye, &Vector3::zeros())).unwrap();
        assert!((cam.center() - eye).norm() < 1e-12);
    }
}
