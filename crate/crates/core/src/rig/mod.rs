//! Avatar rigging: linear blend skinning, time sampling of trajectories and
//! capsule tracks, capsule baking, and a procedural walk generator.

mod walk;

use nalgebra::{Isometry3, Matrix3, Point3, Quaternion, UnitQuaternion, Vector3, Vector4};
use rayon::prelude::*;

pub use crate::assets::JointPose;
use crate::assets::{AvatarBundle, CapsuleTrack, GaussianCloud, Skeleton, Trajectory};
use crate::geom::{nlerp, Capsule};
pub use walk::{forward_kinematics, generate_walk_trajectory, Gait, GAIT_ARM_AMPLITUDE, GAIT_LEG_AMPLITUDE};

/// Capsules of all bones at one instant.
pub type CapsuleSet = Vec<Capsule>;

/// Capsule radius as a fraction of rest bone length.
pub const CAPSULE_RADIUS_FACTOR: f64 = 0.25;
pub const CAPSULE_RADIUS_MIN: f64 = 0.03;
pub const CAPSULE_RADIUS_MAX: f64 = 0.12;

#[derive(Debug, thiserror::Error)]
pub enum RigError {
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Effective per-joint skinning transforms `T_j * B_j^-1`.
pub fn skinning_transforms(inv_bind: &[Isometry3<f64>], pose: &JointPose) -> Vec<Isometry3<f64>> {
    pose.joints.iter().zip(inv_bind).map(|(t, b)| t * b).collect()
}

/// Deforms the canonical cloud into world space.
///
/// Positions follow `root * sum_j w_j (T_j B_j^-1) mu`, evaluated as
/// `mu + sum_j w_j (A_j mu - mu)` so the rest pose reproduces the input
/// exactly. Rotations use a weighted quaternion average taken in the
/// hemisphere of each splat's dominant joint.
pub fn lbs_deform(bundle: &AvatarBundle, pose: &JointPose) -> Result<GaussianCloud, RigError> {
    let j = bundle.n_joints();
    if pose.joints.len() != j {
        return Err(RigError::Contract(format!(
            "pose has {} joints, bundle has {j}",
            pose.joints.len()
        )));
    }
    let eff = skinning_transforms(&bundle.inv_bind, pose);
    let mats: Vec<(Matrix3<f64>, Vector3<f64>)> = eff
        .iter()
        .map(|a| (a.rotation.to_rotation_matrix().into_inner(), a.translation.vector))
        .collect();
    let quats: Vec<Vector4<f64>> = eff.iter().map(|a| a.rotation.as_ref().coords).collect();
    let root_m = pose.root.rotation.to_rotation_matrix().into_inner();
    let root_t = pose.root.translation.vector;
    let root_q = *pose.root.rotation.quaternion();

    let canon = &bundle.canonical;
    let mut out = canon.clone();
    out.positions
        .par_iter_mut()
        .zip(out.rotations.par_iter_mut())
        .enumerate()
        .with_min_len(512)
        .for_each(|(i, (pos, rot))| {
            let w = bundle.weight_row(i);
            let mu = Vector3::from(canon.positions[i].map(f64::from));
            let mut delta = Vector3::zeros();
            let mut dominant = 0;
            for (k, &wk) in w.iter().enumerate() {
                if wk > w[dominant] {
                    dominant = k;
                }
                if wk != 0.0 {
                    let (m, t) = &mats[k];
                    delta += (m * mu + t - mu) * f64::from(wk);
                }
            }
            let p = root_m * (mu + delta) + root_t;
            *pos = [p.x as f32, p.y as f32, p.z as f32];

            let qd = quats[dominant];
            let mut acc = Vector4::zeros();
            for (k, &wk) in w.iter().enumerate() {
                if wk != 0.0 {
                    let q = quats[k];
                    let s = if q.dot(&qd) < 0.0 { -1.0 } else { 1.0 };
                    acc += q * (s * f64::from(wk));
                }
            }
            let blend = Quaternion::from(acc / acc.norm());
            let [cw, cx, cy, cz] = rot.map(f64::from);
            let q = root_q * blend * Quaternion::new(cw, cx, cy, cz);
            *rot = [q.w as f32, q.i as f32, q.j as f32, q.k as f32];
        });
    Ok(out)
}

/// Maps time to a bracketing frame pair `(f, lambda)`, clamped at the end.
/// Times within 1e-9 frames of an integer snap to that frame.
pub(crate) fn frame_position(n_frames: usize, fps: f64, t: f64) -> Result<(usize, f64), RigError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(RigError::Contract(format!("sample time must be finite and >= 0, got {t}")));
    }
    if n_frames == 0 {
        return Err(RigError::Contract("cannot sample an empty track".into()));
    }
    let last = n_frames - 1;
    let x = t * fps;
    if x >= last as f64 {
        return Ok((last, 0.0));
    }
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        return Ok((r as usize, 0.0));
    }
    let f = x.floor();
    Ok((f as usize, x - f))
}

fn lerp_iso(a: &Isometry3<f64>, b: &Isometry3<f64>, lambda: f64) -> Isometry3<f64> {
    let t = a.translation.vector.lerp(&b.translation.vector, lambda);
    Isometry3::from_parts(t.into(), nlerp(&a.rotation, &b.rotation, lambda))
}

/// Joint and root transforms at time `t` seconds.
pub fn sample_pose(trajectory: &Trajectory, t: f64) -> Result<JointPose, RigError> {
    let (f, lambda) = frame_position(trajectory.frames.len(), trajectory.fps, t)?;
    let a = &trajectory.frames[f];
    if lambda == 0.0 {
        return Ok(a.clone());
    }
    let b = &trajectory.frames[f + 1];
    Ok(JointPose {
        joints: a.joints.iter().zip(&b.joints).map(|(x, y)| lerp_iso(x, y, lambda)).collect(),
        root: lerp_iso(&a.root, &b.root, lambda),
    })
}

/// Capsules at time `t`, linearly interpolated between frames.
pub fn sample_capsules(track: &CapsuleTrack, t: f64, fps: f64) -> Result<CapsuleSet, RigError> {
    let (f, lambda) = frame_position(track.frames.len(), fps, t)?;
    let a = &track.frames[f];
    if lambda == 0.0 {
        return Ok(a.clone());
    }
    let b = &track.frames[f + 1];
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            Capsule::new(
                x.p0.lerp(&y.p0, lambda),
                x.p1.lerp(&y.p1, lambda),
                x.radius + (y.radius - x.radius) * lambda,
            )
        })
        .collect())
}

/// Radius of the proxy capsule for a bone of the given rest length.
pub fn capsule_radius(bone_length: f64) -> f64 {
    (CAPSULE_RADIUS_FACTOR * bone_length).clamp(CAPSULE_RADIUS_MIN, CAPSULE_RADIUS_MAX)
}

/// World-space joint positions for a pose: `root * T_j * B_j^-1 * rest_j`.
pub fn posed_joint_positions(skeleton: &Skeleton, inv_bind: &[Isometry3<f64>], pose: &JointPose) -> Vec<Vector3<f64>> {
    skeleton
        .joints
        .iter()
        .enumerate()
        .map(|(j, joint)| (pose.root * pose.joints[j] * inv_bind[j] * Point3::from(joint.rest_pos)).coords)
        .collect()
}

/// One capsule per bone (ordered by child index) for every trajectory
/// frame, spanning the posed parent and child joints.
pub fn bake_capsules(
    skeleton: &Skeleton,
    inv_bind: &[Isometry3<f64>],
    trajectory: &Trajectory,
) -> Result<CapsuleTrack, RigError> {
    let n = skeleton.len();
    if inv_bind.len() != n || trajectory.n_joints() != n {
        return Err(RigError::Contract(format!(
            "skeleton has {n} joints, inverse binds {}, trajectory {}",
            inv_bind.len(),
            trajectory.n_joints()
        )));
    }
    let bones = skeleton.bones();
    let radii: Vec<f64> = bones
        .iter()
        .map(|&(p, c)| {
            let len = (skeleton.joints[c].rest_pos - skeleton.joints[p].rest_pos).norm();
            if len <= 1e-9 {
                log::warn!("bone {p}->{c} has zero rest length; using a {CAPSULE_RADIUS_MIN} m sphere");
            }
            capsule_radius(len)
        })
        .collect();
    let frames = trajectory
        .frames
        .iter()
        .map(|pose| {
            let pts = posed_joint_positions(skeleton, inv_bind, pose);
            bones
                .iter()
                .zip(&radii)
                .map(|(&(p, c), &r)| Capsule::new(pts[p], pts[c], r))
                .collect()
        })
        .collect();
    Ok(CapsuleTrack { frames })
}

/// Inverse bind transforms for a skeleton whose bind pose is the rest pose
/// with identity joint orientations.
pub fn rest_inverse_binds(skeleton: &Skeleton) -> Vec<Isometry3<f64>> {
    skeleton
        .joints
        .iter()
        .map(|j| Isometry3::from_parts((-j.rest_pos).into(), UnitQuaternion::identity()))
        .collect()
}
