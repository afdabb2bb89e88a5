//! Procedural walking: root follows a waypoint polyline, limbs swing with a
//! sinusoidal gait whose cycle covers one meter of travel.

use std::f64::consts::TAU;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};

use super::RigError;
use crate::assets::{JointPose, Skeleton, Trajectory};

/// Peak hip swing in radians.
pub const GAIT_LEG_AMPLITUDE: f64 = 0.45;
/// Peak shoulder swing in radians (counter-phase to the same-side leg).
pub const GAIT_ARM_AMPLITUDE: f64 = 0.35;
/// A joint swings when a child hangs at least this far below it.
const SWING_DROP: f64 = 0.2;
/// Meters of travel per gait cycle.
const STRIDE_CYCLE: f64 = 1.0;

/// Global joint transforms from per-joint local rotations. Each joint sits at
/// its rest offset from the parent; the root sits at its rest position.
pub fn forward_kinematics(skeleton: &Skeleton, locals: &[UnitQuaternion<f64>]) -> Vec<Isometry3<f64>> {
    let joints = &skeleton.joints;
    let mut global = vec![Isometry3::identity(); joints.len()];
    for &j in skeleton.topological_order() {
        let (parent, offset) = match joints[j].parent {
            Some(p) => (global[p], joints[j].rest_pos - joints[p].rest_pos),
            None => (Isometry3::identity(), joints[j].rest_pos),
        };
        global[j] = parent * Isometry3::from_parts(Translation3::from(offset), locals[j]);
    }
    global
}

/// Swing joints and their signed amplitudes for one skeleton.
#[derive(Clone, Debug, PartialEq)]
pub struct Gait {
    n_joints: usize,
    swings: Vec<(usize, f64)>,
}

impl Gait {
    /// Picks the topmost joint of each hanging chain (hips, shoulders).
    /// Joints with `+y` rest position are on the left side; joints below the
    /// root are legs, the rest arms.
    pub fn for_skeleton(skeleton: &Skeleton) -> Self {
        let joints = &skeleton.joints;
        let root_z = joints[0].rest_pos.z;
        let mut is_swing = vec![false; joints.len()];
        let mut swings = Vec::new();
        for &j in skeleton.topological_order() {
            let Some(p) = joints[j].parent else { continue };
            let inherited = {
                let mut a = Some(p);
                let mut found = false;
                while let Some(k) = a {
                    found |= is_swing[k];
                    a = joints[k].parent;
                }
                found
            };
            if inherited {
                continue;
            }
            let hangs = joints
                .iter()
                .any(|c| c.parent == Some(j) && c.rest_pos.z < joints[j].rest_pos.z - SWING_DROP);
            if !hangs {
                continue;
            }
            let side = if joints[j].rest_pos.y >= 0.0 { 1.0 } else { -1.0 };
            let amp = if joints[j].rest_pos.z < root_z {
                GAIT_LEG_AMPLITUDE * side
            } else {
                -GAIT_ARM_AMPLITUDE * side
            };
            is_swing[j] = true;
            swings.push((j, amp));
        }
        Self {
            n_joints: joints.len(),
            swings,
        }
    }

    pub fn swing_joints(&self) -> &[(usize, f64)] {
        &self.swings
    }

    /// Local joint rotations at `phase` cycles.
    pub fn locals(&self, phase: f64) -> Vec<UnitQuaternion<f64>> {
        let mut out = vec![UnitQuaternion::identity(); self.n_joints];
        let s = (TAU * phase).sin();
        for &(j, amp) in &self.swings {
            out[j] = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), amp * s);
        }
        out
    }
}

/// Walk along `waypoints` (ground-plane meters) at `speed` m/s, sampled at
/// `fps`. The root stays on the ground facing the current segment.
pub fn generate_walk_trajectory(
    waypoints: &[[f64; 2]],
    skeleton: &Skeleton,
    speed: f64,
    fps: f64,
) -> Result<Trajectory, RigError> {
    if !(speed > 0.0) || !(fps > 0.0) {
        return Err(RigError::Contract(format!("speed and fps must be positive ({speed}, {fps})")));
    }
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(waypoints.len());
    for w in waypoints {
        if !w.iter().all(|v| v.is_finite()) {
            return Err(RigError::Contract(format!("non-finite waypoint {w:?}")));
        }
        match pts.last() {
            Some(l) if (l[0] - w[0]).hypot(l[1] - w[1]) < 1e-9 => {
                log::warn!("collapsing coincident waypoint {w:?}");
            }
            _ => pts.push(*w),
        }
    }
    if pts.len() < 2 {
        return Err(RigError::Contract("walk needs at least two distinct waypoints".into()));
    }
    let seg_len: Vec<f64> = pts.windows(2).map(|p| (p[1][0] - p[0][0]).hypot(p[1][1] - p[0][1])).collect();
    let total: f64 = seg_len.iter().sum();
    let n_frames = (total / speed * fps).round() as usize + 1;
    let gait = Gait::for_skeleton(skeleton);

    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let s = if k + 1 == n_frames { total } else { (k as f64 * speed / fps).min(total) };
        let (pos, yaw) = point_on_path(&pts, &seg_len, s);
        let root = Isometry3::from_parts(
            Translation3::new(pos[0], pos[1], 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        );
        frames.push(JointPose {
            joints: forward_kinematics(skeleton, &gait.locals(s / STRIDE_CYCLE)),
            root,
        });
    }
    Ok(Trajectory { fps, frames })
}

fn point_on_path(pts: &[[f64; 2]], seg_len: &[f64], s: f64) -> ([f64; 2], f64) {
    let mut rem = s;
    for (i, &len) in seg_len.iter().enumerate() {
        let (a, b) = (pts[i], pts[i + 1]);
        let yaw = (b[1] - a[1]).atan2(b[0] - a[0]);
        if rem <= len || i + 1 == seg_len.len() {
            let u = (rem / len).clamp(0.0, 1.0);
            return ([a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u], yaw);
        }
        rem -= len;
    }
    unreachable!("path has at least one segment")
}
