//! EWA projection of 3D gaussians to screen-space footprints.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Point3, Vector3};
use rayon::prelude::*;

use super::sh::eval_sh_unchecked;
use super::Camera;
use crate::assets::GaussianCloud;

/// Low-pass floor added to the screen-space covariance diagonal (px^2).
pub const COV2D_REGULARIZATION: f64 = 0.3;
/// Footprint support radius in standard deviations.
pub const SUPPORT_SIGMAS: f64 = 3.0;
/// Footprints with a covariance determinant at or below this are skipped.
pub const MIN_COV2D_DET: f64 = 1e-12;

/// Screen-space projection of a single gaussian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Footprint {
    pub mean2d: [f64; 2],
    pub cov2d: Matrix2<f64>,
    /// Camera-space z.
    pub depth: f64,
}

/// Pinhole projection of a camera-space point to pixel coordinates.
pub fn project_point(p_cam: &Vector3<f64>, camera: &Camera) -> [f64; 2] {
    [
        camera.fx * p_cam.x / p_cam.z + camera.cx,
        camera.fy * p_cam.y / p_cam.z + camera.cy,
    ]
}

/// Jacobian of [`project_point`] with respect to the camera-space point.
pub fn projection_jacobian(p_cam: &Vector3<f64>, camera: &Camera) -> Matrix2x3<f64> {
    let (x, y, z) = (p_cam.x, p_cam.y, p_cam.z);
    let iz = 1.0 / z;
    let iz2 = iz * iz;
    Matrix2x3::new(
        camera.fx * iz,
        0.0,
        -camera.fx * x * iz2,
        0.0,
        camera.fy * iz,
        -camera.fy * y * iz2,
    )
}

/// Projects a world-space gaussian `(mean, cov3d)`.
///
/// Returns `None` when the center lies outside `(near, far)` or the 3-sigma
/// footprint misses the image.
pub fn project_gaussian(mean: &Vector3<f64>, cov3d: &Matrix3<f64>, camera: &Camera) -> Option<Footprint> {
    let p_cam = (camera.world_to_camera * Point3::from(*mean)).coords;
    let depth = p_cam.z;
    if !(depth > camera.near && depth < camera.far) {
        return None;
    }
    let w = camera.world_to_camera.rotation.to_rotation_matrix().into_inner();
    let j = projection_jacobian(&p_cam, camera);
    let t = j * w;
    let mut cov2d = t * cov3d * t.transpose();
    cov2d[(0, 0)] += COV2D_REGULARIZATION;
    cov2d[(1, 1)] += COV2D_REGULARIZATION;
    // symmetrize against rounding
    let off = 0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]);
    cov2d[(0, 1)] = off;
    cov2d[(1, 0)] = off;

    let mean2d = project_point(&p_cam, camera);
    let ex = SUPPORT_SIGMAS * cov2d[(0, 0)].max(0.0).sqrt();
    let ey = SUPPORT_SIGMAS * cov2d[(1, 1)].max(0.0).sqrt();
    if mean2d[0] + ex < 0.0
        || mean2d[0] - ex > camera.width as f64
        || mean2d[1] + ey < 0.0
        || mean2d[1] - ey > camera.height as f64
        || !mean2d.iter().all(|v| v.is_finite())
    {
        return None;
    }
    Some(Footprint { mean2d, cov2d, depth })
}

/// A projected, shaded splat ready for blending.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScreenSplat {
    /// Index into the source cloud; breaks depth ties.
    pub index: u32,
    pub mean: [f32; 2],
    /// Upper triangle `(a, b, c)` of the regularized 2x2 covariance.
    pub cov: [f32; 3],
    /// Upper triangle of the inverse covariance.
    pub conic: [f32; 3],
    pub depth: f32,
    pub color: [f32; 3],
    /// Activated opacity `sigmoid(logit)`.
    pub opacity: f32,
    /// Half-widths of the 3-sigma bounding box in pixels.
    pub extent: [f32; 2],
}

impl ScreenSplat {
    /// Blending weight at pixel `(px, py)` before the opacity clip, or `None`
    /// outside the 3-sigma ellipse.
    #[inline]
    pub fn falloff(&self, px: f32, py: f32) -> Option<f32> {
        let dx = px - self.mean[0];
        let dy = py - self.mean[1];
        let q = self.conic[0] * dx * dx + 2.0 * self.conic[1] * dx * dy + self.conic[2] * dy * dy;
        if !(q <= (SUPPORT_SIGMAS * SUPPORT_SIGMAS) as f32) {
            return None;
        }
        Some((-0.5 * q).exp())
    }
}

/// Visible splats of a cloud, sorted by `(depth, index)`.
#[derive(Clone, Debug, Default)]
pub struct ProjectedCloud {
    pub splats: Vec<ScreenSplat>,
    pub culled: usize,
    pub degenerate: usize,
}

enum Outcome {
    Visible(ScreenSplat),
    Culled,
    Degenerate,
}

fn project_one(cloud: &GaussianCloud, i: usize, camera: &Camera, eye: &Vector3<f64>) -> Outcome {
    let mean = Vector3::from(cloud.positions[i].map(f64::from));
    let Some(fp) = project_gaussian(&mean, &cloud.covariance(i), camera) else {
        return Outcome::Culled;
    };
    let det = fp.cov2d.determinant();
    if !(det > MIN_COV2D_DET) {
        return Outcome::Degenerate;
    }
    let inv = Matrix2::new(fp.cov2d[(1, 1)], -fp.cov2d[(0, 1)], -fp.cov2d[(1, 0)], fp.cov2d[(0, 0)]) / det;
    let dir = mean - eye;
    let norm = dir.norm();
    let dir = if norm > 0.0 { dir / norm } else { Vector3::z() };
    Outcome::Visible(ScreenSplat {
        index: i as u32,
        mean: [fp.mean2d[0] as f32, fp.mean2d[1] as f32],
        cov: [fp.cov2d[(0, 0)] as f32, fp.cov2d[(0, 1)] as f32, fp.cov2d[(1, 1)] as f32],
        conic: [inv[(0, 0)] as f32, inv[(0, 1)] as f32, inv[(1, 1)] as f32],
        depth: fp.depth as f32,
        color: eval_sh_unchecked(cloud.sh_of(i), cloud.sh_degree(), [dir.x, dir.y, dir.z]),
        opacity: cloud.opacity(i),
        extent: [
            (SUPPORT_SIGMAS * fp.cov2d[(0, 0)].sqrt()) as f32,
            (SUPPORT_SIGMAS * fp.cov2d[(1, 1)].sqrt()) as f32,
        ],
    })
}

/// Projects and shades every splat, then sorts the visible ones by
/// camera-space depth with the cloud index as tie-breaker.
pub fn project_cloud(cloud: &GaussianCloud, camera: &Camera) -> ProjectedCloud {
    let eye = camera.center();
    let outcomes: Vec<Outcome> = (0..cloud.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| project_one(cloud, i, camera, &eye))
        .collect();
    let mut out = ProjectedCloud::default();
    out.splats.reserve(outcomes.len());
    for o in outcomes {
        match o {
            Outcome::Visible(s) => out.splats.push(s),
            Outcome::Culled => out.culled += 1,
            Outcome::Degenerate => out.degenerate += 1,
        }
    }
    out.splats
        .par_sort_unstable_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Isometry3;

    fn cam() -> Camera {
        Camera::new(100.0, 120.0, 32.0, 30.0, 64, 60, 0.1, 50.0, Isometry3::identity()).unwrap()
    }

    #[test]
    fn on_axis_projects_to_principal_point() {
        let fp = project_gaussian(&Vector3::new(0.0, 0.0, 2.0), &(Matrix3::identity() * 0.01), &cam()).unwrap();
        assert_eq!(fp.mean2d, [32.0, 30.0]);
        assert_eq!(fp.depth, 2.0);
    }

    #[test]
    fn isotropic_on_axis_covariance() {
        let (s, z) = (0.05, 2.0);
        let c = cam();
        let fp = project_gaussian(&Vector3::new(0.0, 0.0, z), &(Matrix3::identity() * s * s), &c).unwrap();
        let ex = (c.fx * s / z).powi(2) + COV2D_REGULARIZATION;
        let ey = (c.fy * s / z).powi(2) + COV2D_REGULARIZATION;
        assert!((fp.cov2d[(0, 0)] - ex).abs() < 1e-9);
        assert!((fp.cov2d[(1, 1)] - ey).abs() < 1e-9);
        assert!(fp.cov2d[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn culls_outside_depth_range() {
        let c = cam();
        let cov = Matrix3::identity() * 1e-4;
        assert!(project_gaussian(&Vector3::new(0.0, 0.0, 0.05), &cov, &c).is_none());
        assert!(project_gaussian(&Vector3::new(0.0, 0.0, -1.0), &cov, &c).is_none());
        assert!(project_gaussian(&Vector3::new(0.0, 0.0, 60.0), &cov, &c).is_none());
    }

    #[test]
    fn culls_off_screen_footprint() {
        let c = cam();
        let cov = Matrix3::identity() * 1e-4;
        assert!(project_gaussian(&Vector3::new(10.0, 0.0, 1.0), &cov, &c).is_none());
        // just outside the left edge but the 3-sigma footprint reaches in
        let big = Matrix3::identity() * 0.04;
        assert!(project_gaussian(&Vector3::new(-0.35, 0.0, 1.0), &big, &c).is_some());
    }
}
