use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatnav::assets::{AvatarBundle, CapsuleTrack, GaussianCloud, Joint, JointPose, Skeleton, Trajectory};
use splatnav::rig::{
    bake_capsules, capsule_radius, generate_walk_trajectory, lbs_deform, rest_inverse_binds, sample_capsules,
    sample_pose,
};
use splatnav::synth::humanoid_skeleton;

fn two_joint_skeleton() -> Skeleton {
    Skeleton::new(vec![
        Joint {
            parent: None,
            rest_pos: Vector3::new(0.0, 0.0, 1.0),
        },
        Joint {
            parent: Some(0),
            rest_pos: Vector3::new(0.0, 0.0, 0.6),
        },
    ])
    .unwrap()
}

fn bundle(weights: Vec<f32>, positions: Vec<[f32; 3]>, inv_bind: Vec<Isometry3<f64>>) -> AvatarBundle {
    let mut canonical = GaussianCloud::new(1);
    for p in positions {
        canonical.push(p, &[0.1; 12], 0.5, [-3.0, -2.5, -2.0], [0.9, 0.1, 0.2, 0.3]);
    }
    let skeleton = two_joint_skeleton();
    let pose = JointPose {
        joints: vec![Isometry3::identity(); 2],
        root: Isometry3::identity(),
    };
    AvatarBundle {
        canonical,
        weights,
        inv_bind,
        skeleton,
        trajectory: Trajectory {
            fps: 30.0,
            frames: vec![pose],
        },
        capsule_track: CapsuleTrack { frames: vec![vec![]] },
    }
}

fn translation(x: f64, y: f64, z: f64) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::identity())
}

#[test]
fn identity_pose_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 50;
    let positions: Vec<[f32; 3]> = (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    let weights: Vec<f32> = (0..n)
        .flat_map(|_| {
            let w: f32 = rng.gen_range(0.0..1.0);
            [w, 1.0 - w]
        })
        .collect();
    let b = bundle(weights, positions, vec![Isometry3::identity(); 2]);
    let pose = JointPose {
        joints: vec![Isometry3::identity(); 2],
        root: Isometry3::identity(),
    };
    let out = lbs_deform(&b, &pose).unwrap();
    assert_eq!(out.positions, b.canonical.positions);
    assert_eq!(out.log_scales, b.canonical.log_scales);
    assert_eq!(out.opacities, b.canonical.opacities);
    assert_eq!(out.sh, b.canonical.sh);
    for (a, c) in out.rotations.iter().zip(&b.canonical.rotations) {
        for k in 0..4 {
            assert!((a[k] - c[k]).abs() < 1e-6);
        }
    }
}

#[test]
fn one_hot_weights_move_rigidly() {
    let positions = vec![[0.1, 0.2, 0.3], [-0.5, 0.25, 1.0]];
    let b = bundle(vec![0.0, 1.0, 0.0, 1.0], positions.clone(), vec![Isometry3::identity(); 2]);
    let t = Vector3::new(0.3, -0.2, 0.7);
    let pose = JointPose {
        joints: vec![Isometry3::identity(), translation(t.x, t.y, t.z)],
        root: Isometry3::identity(),
    };
    let out = lbs_deform(&b, &pose).unwrap();
    for (p, q) in out.positions.iter().zip(&positions) {
        for k in 0..3 {
            assert!((f64::from(p[k]) - (f64::from(q[k]) + t[k])).abs() < 1e-6);
        }
    }
}

#[test]
fn half_weights_average_translations() {
    let positions = vec![[0.25, -0.5, 1.0]];
    let b = bundle(vec![0.5, 0.5], positions, vec![Isometry3::identity(); 2]);
    let pose = JointPose {
        joints: vec![translation(0.5, 0.0, 0.25), translation(-0.25, 1.0, 0.75)],
        root: Isometry3::identity(),
    };
    let out = lbs_deform(&b, &pose).unwrap();
    let expected = [0.25 + 0.125, -0.5 + 0.5, 1.0 + 0.5];
    for (got, want) in out.positions[0].iter().zip(expected) {
        assert!((f64::from(*got) - want).abs() <= 1e-9);
    }
}

#[test]
fn sample_pose_on_frame_midpoint_and_clamp() {
    let frames: Vec<JointPose> = (0..4)
        .map(|k| JointPose {
            joints: vec![translation(k as f64, 0.0, 0.0), translation(0.0, 2.0 * k as f64, 0.0)],
            root: translation(0.1 * k as f64, 0.0, 0.0),
        })
        .collect();
    let traj = Trajectory { fps: 10.0, frames };
    let p = sample_pose(&traj, 0.2).unwrap();
    assert_eq!(p, traj.frames[2]);
    let mid = sample_pose(&traj, 0.15).unwrap();
    assert!((mid.joints[0].translation.x - 1.5).abs() < 1e-12);
    assert!((mid.joints[1].translation.y - 3.0).abs() < 1e-12);
    assert_eq!(sample_pose(&traj, 99.0).unwrap(), traj.frames[3]);
    assert!(sample_pose(&traj, -0.1).is_err());
}

#[test]
fn two_joint_capsule_radius() {
    let skel = Skeleton::new(vec![
        Joint {
            parent: None,
            rest_pos: Vector3::zeros(),
        },
        Joint {
            parent: Some(0),
            rest_pos: Vector3::new(0.4, 0.0, 0.0),
        },
    ])
    .unwrap();
    let inv = rest_inverse_binds(&skel);
    let rest = JointPose {
        joints: inv.iter().map(|b| b.inverse()).collect(),
        root: Isometry3::identity(),
    };
    let traj = Trajectory {
        fps: 30.0,
        frames: vec![rest.clone(); 5],
    };
    let track = bake_capsules(&skel, &inv, &traj).unwrap();
    assert_eq!(track.shape(), (5, 1, 7));
    let c = track.frames[0][0];
    assert!((c.radius - 0.1).abs() < 1e-12);
    assert!(((c.p1 - c.p0).norm() - 0.4).abs() < 1e-12);
    // identity trajectory: every frame equals the rest capsules
    assert!(track.frames.iter().all(|f| f == &track.frames[0]));
    assert_eq!(capsule_radius(0.05), 0.03);
    assert_eq!(capsule_radius(2.0), 0.12);
}

/// Forward kinematics written out directly: global = parent * (offset, local).
fn fk(skel: &Skeleton, locals: &[UnitQuaternion<f64>]) -> Vec<Isometry3<f64>> {
    let mut out: Vec<Isometry3<f64>> = Vec::with_capacity(skel.len());
    for (j, joint) in skel.joints.iter().enumerate() {
        let g = match joint.parent {
            None => Isometry3::from_parts(Translation3::from(joint.rest_pos), locals[j]),
            Some(p) => {
                let off = joint.rest_pos - skel.joints[p].rest_pos;
                out[p] * Isometry3::from_parts(Translation3::from(off), locals[j])
            }
        };
        out.push(g);
    }
    out
}

#[test]
fn baked_capsules_match_forward_kinematics() {
    let skel = humanoid_skeleton();
    let inv = rest_inverse_binds(&skel);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut frames = Vec::new();
    let mut expected = Vec::new();
    for _ in 0..60 {
        let locals: Vec<UnitQuaternion<f64>> = (0..skel.len())
            .map(|_| {
                UnitQuaternion::from_euler_angles(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
            })
            .collect();
        let globals = fk(&skel, &locals);
        let root = Isometry3::from_parts(
            Translation3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), rng.gen_range(-3.0..3.0)),
        );
        let joints_world: Vec<Vector3<f64>> = globals.iter().map(|g| (root * g).translation.vector).collect();
        let caps: Vec<_> = skel
            .joints
            .iter()
            .enumerate()
            .filter_map(|(j, joint)| joint.parent.map(|p| (p, j)))
            .map(|(p, j)| {
                let len = (skel.joints[j].rest_pos - skel.joints[p].rest_pos).norm();
                (joints_world[p], joints_world[j], (0.25 * len).clamp(0.03, 0.12))
            })
            .collect();
        expected.push(caps);
        frames.push(JointPose { joints: globals, root });
    }
    let traj = Trajectory { fps: 30.0, frames };
    let track = bake_capsules(&skel, &inv, &traj).unwrap();
    assert_eq!(track.shape(), (60, skel.len() - 1, 7));
    for (f, caps) in expected.iter().enumerate() {
        assert_eq!(caps.len(), track.frames[f].len());
        for (c, (a, b, r)) in track.frames[f].iter().zip(caps) {
            assert!((c.p0 - a).norm() < 1e-9 && (c.p1 - b).norm() < 1e-9, "frame {f}");
            assert!((c.radius - r).abs() < 1e-12);
        }
    }
    // sampling on and between frames
    let on = sample_capsules(&track, 10.0 / 30.0, 30.0).unwrap();
    assert_eq!(on, track.frames[10]);
    let mid = sample_capsules(&track, 10.5 / 30.0, 30.0).unwrap();
    let want = (track.frames[10][0].p0 + track.frames[11][0].p0) * 0.5;
    assert!((mid[0].p0 - want).norm() < 1e-9);
    assert_eq!(sample_capsules(&track, 100.0, 30.0).unwrap(), track.frames[59]);
}

#[test]
fn walk_trajectory_frame_count_and_root_motion() {
    let skel = humanoid_skeleton();
    let traj = generate_walk_trajectory(&[[0.0, 0.0], [2.0, 0.0]], &skel, 1.0, 30.0).unwrap();
    assert_eq!(traj.frames.len(), 61);
    for (k, f) in traj.frames.iter().enumerate() {
        let x = f.root.translation.x;
        assert!((x - 2.0 * k as f64 / 60.0).abs() < 1e-9);
        let fwd = f.root.rotation * Vector3::x();
        assert!((fwd - Vector3::x()).norm() < 1e-12);
    }
    let fast = generate_walk_trajectory(&[[0.0, 0.0], [2.0, 0.0]], &skel, 2.0, 30.0).unwrap();
    assert!((fast.frames.len() as f64 - 30.5).abs() <= 1.0);
    assert!(generate_walk_trajectory(&[[0.0, 0.0]], &skel, 1.0, 30.0).is_err());
}
