//! Procedural assets: random gaussian clouds, a 15-joint humanoid avatar,
//! and a walled room with a matching occupancy grid.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assets::{
    save_avatar_bundle, save_gaussian_ply, sh_coeff_count, AvatarBundle, GaussianCloud, Joint, Skeleton,
};
use crate::geom::quat_to_wxyz;
use crate::nav::{build_navgrid, OccupancyMap};
use crate::rig::{bake_capsules, capsule_radius, generate_walk_trajectory, rest_inverse_binds};
use crate::world::{AvatarInstance, World};
use crate::Error;

const SH_C0: f32 = 0.282_094_8;

/// DC coefficient that renders as `rgb` (before view-dependent terms).
pub fn dc_for_color(rgb: [f32; 3]) -> [f32; 3] {
    rgb.map(|c| (c - 0.5) / SH_C0)
}

fn random_unit_quat(rng: &mut impl Rng) -> [f32; 4] {
    let q = UnitQuaternion::from_euler_angles(
        rng.gen_range(-3.1..3.1),
        rng.gen_range(-1.5..1.5),
        rng.gen_range(-3.1..3.1),
    );
    quat_to_wxyz(&q).map(|v| v as f32)
}

/// `n` gaussians uniformly in the box `[lo, hi]` with random colors,
/// opacities, anisotropic scales and orientations.
pub fn random_cloud(n: usize, sh_degree: u8, lo: [f32; 3], hi: [f32; 3], scale: (f32, f32), rng: &mut impl Rng) -> GaussianCloud {
    let k = sh_coeff_count(sh_degree);
    let mut cloud = GaussianCloud::with_capacity(sh_degree, n);
    let mut sh = vec![0.0f32; k * 3];
    for _ in 0..n {
        let pos = std::array::from_fn(|a| rng.gen_range(lo[a]..=hi[a]));
        for (j, v) in sh.iter_mut().enumerate() {
            *v = if j < 3 { rng.gen_range(-1.5..1.5) } else { rng.gen_range(-0.3..0.3) };
        }
        let log_scales = std::array::from_fn(|_| rng.gen_range(scale.0..=scale.1).ln());
        cloud.push(pos, &sh, rng.gen_range(-2.0..4.0), log_scales, random_unit_quat(rng));
    }
    cloud
}

/// Names of the humanoid joints, indexed like [`humanoid_skeleton`].
pub const HUMANOID_JOINTS: [&str; 15] = [
    "pelvis", "spine", "head", "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist", "l_hip",
    "l_knee", "l_ankle", "r_hip", "r_knee", "r_ankle",
];

/// Standing humanoid facing +x, left side at +y, feet on z = 0.
pub fn humanoid_skeleton() -> Skeleton {
    let j = |parent: Option<usize>, x: f64, y: f64, z: f64| Joint {
        parent,
        rest_pos: Vector3::new(x, y, z),
    };
    Skeleton::new(vec![
        j(None, 0.0, 0.0, 0.95),
        j(Some(0), 0.0, 0.0, 1.25),
        j(Some(1), 0.0, 0.0, 1.62),
        j(Some(1), 0.0, 0.19, 1.42),
        j(Some(3), 0.0, 0.21, 1.14),
        j(Some(4), 0.0, 0.22, 0.88),
        j(Some(1), 0.0, -0.19, 1.42),
        j(Some(6), 0.0, -0.21, 1.14),
        j(Some(7), 0.0, -0.22, 0.88),
        j(Some(0), 0.0, 0.1, 0.9),
        j(Some(9), 0.0, 0.1, 0.5),
        j(Some(10), 0.0, 0.1, 0.08),
        j(Some(0), 0.0, -0.1, 0.9),
        j(Some(12), 0.0, -0.1, 0.5),
        j(Some(13), 0.0, -0.1, 0.08),
    ])
    .expect("static humanoid skeleton is valid")
}

/// Canonical gaussians spread along the bones of `skeleton`, with skinning
/// weights on the bone's parent joint blending toward the child near the
/// joint. Returns the cloud and N×J weights.
pub fn skinned_cloud(skeleton: &Skeleton, n: usize, sh_degree: u8, rng: &mut impl Rng) -> (GaussianCloud, Vec<f32>) {
    let bones = skeleton.bones();
    let lengths: Vec<f64> = bones
        .iter()
        .map(|&(p, c)| (skeleton.joints[c].rest_pos - skeleton.joints[p].rest_pos).norm().max(0.05))
        .collect();
    let total: f64 = lengths.iter().sum();
    let nj = skeleton.len();
    let k = sh_coeff_count(sh_degree);
    let mut cloud = GaussianCloud::with_capacity(sh_degree, n);
    let mut weights = vec![0.0f32; n * nj];
    let palette = [[0.8, 0.3, 0.25], [0.25, 0.35, 0.75], [0.85, 0.7, 0.55], [0.2, 0.2, 0.25]];
    let mut sh = vec![0.0f32; k * 3];
    for i in 0..n {
        let mut pick = rng.gen_range(0.0..total);
        let mut b = 0;
        while b + 1 < bones.len() && pick > lengths[b] {
            pick -= lengths[b];
            b += 1;
        }
        let (p, c) = bones[b];
        let (a, z) = (skeleton.joints[p].rest_pos, skeleton.joints[c].rest_pos);
        let u: f64 = rng.gen_range(0.0..1.0);
        let r = 0.7 * capsule_radius(lengths[b]) * rng.gen_range(0.0f64..1.0).sqrt();
        let axis = (z - a).try_normalize(1e-9).unwrap_or_else(Vector3::z);
        let side = axis.cross(&Vector3::x()).try_normalize(1e-9).unwrap_or_else(|| axis.cross(&Vector3::y()).normalize());
        let up = axis.cross(&side);
        let th = rng.gen_range(0.0..TAU);
        let pos = a + (z - a) * u + (side * th.cos() + up * th.sin()) * r;
        let color = palette[b % palette.len()].map(|v: f32| (v + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0));
        sh.iter_mut().for_each(|v| *v = 0.0);
        sh[..3].copy_from_slice(&dc_for_color(color));
        let s = (0.35 * capsule_radius(lengths[b])).max(0.012) as f32;
        cloud.push(
            [pos.x as f32, pos.y as f32, pos.z as f32],
            &sh,
            3.0,
            [s.ln(), s.ln(), (1.6 * s).ln()],
            random_unit_quat(rng),
        );
        let w_child = if u > 0.75 { (0.5 * (u - 0.75) / 0.25) as f32 } else { 0.0 };
        weights[i * nj + p] = 1.0 - w_child;
        weights[i * nj + c] += w_child;
    }
    (cloud, weights)
}

/// Humanoid avatar walking along `waypoints` at `speed` m/s.
pub fn walking_humanoid(
    waypoints: &[[f64; 2]],
    speed: f64,
    n_gaussians: usize,
    sh_degree: u8,
    seed: u64,
) -> Result<AvatarBundle, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skeleton = humanoid_skeleton();
    let (canonical, weights) = skinned_cloud(&skeleton, n_gaussians, sh_degree, &mut rng);
    let inv_bind = rest_inverse_binds(&skeleton);
    let trajectory = generate_walk_trajectory(waypoints, &skeleton, speed, 30.0)?;
    let capsule_track = bake_capsules(&skeleton, &inv_bind, &trajectory)?;
    Ok(AvatarBundle {
        canonical,
        weights,
        inv_bind,
        skeleton,
        trajectory,
        capsule_track,
    })
}

/// Rectangular room: a checkered floor, four walls and optional box
/// obstacles `[x0, y0, x1, y1]`, all as gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomSpec {
    pub size: [f64; 2],
    pub wall_height: f64,
    /// Center spacing of surface gaussians, meters.
    pub spacing: f64,
    pub boxes: Vec<[f64; 4]>,
    pub resolution: f64,
    pub agent_radius: f64,
}

impl Default for RoomSpec {
    fn default() -> Self {
        Self {
            size: [10.0, 8.0],
            wall_height: 2.5,
            spacing: 0.1,
            boxes: Vec::new(),
            resolution: 0.05,
            agent_radius: crate::assets::DEFAULT_AGENT_RADIUS,
        }
    }
}

impl RoomSpec {
    /// Occupancy grid covering the floor; walls are the map border plus
    /// the boxes.
    pub fn occupancy(&self) -> OccupancyMap {
        let w = (self.size[0] / self.resolution).round() as usize + 1;
        let h = (self.size[1] / self.resolution).round() as usize + 1;
        OccupancyMap::procedural(w, h, self.resolution, [0.0, 0.0], &self.boxes)
    }

    pub fn cloud(&self) -> GaussianCloud {
        let mut cloud = GaussianCloud::new(0);
        let s = self.spacing;
        let log_s = (0.6 * s) as f32;
        let flat = |c: &mut GaussianCloud, p: [f64; 3], normal_axis: usize, color: [f32; 3]| {
            let mut ls = [log_s.ln(); 3];
            ls[normal_axis] = 0.004f32.ln();
            c.push(p.map(|v| v as f32), &dc_for_color(color), 4.0, ls, [1.0, 0.0, 0.0, 0.0]);
        };
        let [sx, sy] = self.size;
        let (nx, ny, nz) = ((sx / s) as usize, (sy / s) as usize, (self.wall_height / s) as usize);
        for ix in 0..=nx {
            for iy in 0..=ny {
                let (x, y) = (ix as f64 * s, iy as f64 * s);
                let check = ((x.floor() + y.floor()) as i64 % 2 == 0) as u8 as f32;
                flat(&mut cloud, [x, y, 0.0], 2, [0.55 + 0.15 * check, 0.55 + 0.1 * check, 0.5]);
            }
        }
        let wall = [0.85, 0.82, 0.75];
        for iz in 0..=nz {
            let z = iz as f64 * s;
            for ix in 0..=nx {
                let x = ix as f64 * s;
                flat(&mut cloud, [x, 0.0, z], 1, wall);
                flat(&mut cloud, [x, sy, z], 1, wall);
            }
            for iy in 0..=ny {
                let y = iy as f64 * s;
                flat(&mut cloud, [0.0, y, z], 0, wall);
                flat(&mut cloud, [sx, y, z], 0, wall);
            }
        }
        let boxc = [0.35, 0.5, 0.4];
        for b in &self.boxes {
            let (x0, x1) = (b[0].min(b[2]), b[0].max(b[2]));
            let (y0, y1) = (b[1].min(b[3]), b[1].max(b[3]));
            let (mx, my) = (((x1 - x0) / s).ceil() as usize, ((y1 - y0) / s).ceil() as usize);
            for iz in 0..=nz.min((1.2 / s) as usize) {
                let z = iz as f64 * s;
                for i in 0..=mx {
                    let x = x0 + (x1 - x0) * i as f64 / mx.max(1) as f64;
                    flat(&mut cloud, [x, y0, z], 1, boxc);
                    flat(&mut cloud, [x, y1, z], 1, boxc);
                }
                for i in 0..=my {
                    let y = y0 + (y1 - y0) * i as f64 / my.max(1) as f64;
                    flat(&mut cloud, [x0, y, z], 0, boxc);
                    flat(&mut cloud, [x1, y, z], 0, boxc);
                }
            }
        }
        cloud
    }

    /// In-memory world with the given avatars.
    pub fn world(&self, with_scene: bool, avatars: Vec<AvatarInstance>) -> Result<World, Error> {
        let grid = build_navgrid(&self.occupancy(), self.agent_radius)?;
        Ok(World {
            scene: Arc::new(if with_scene { self.cloud() } else { GaussianCloud::new(0) }),
            background: [1.0, 1.0, 1.0],
            grid: Some(Arc::new(grid)),
            agent_radius: self.agent_radius,
            avatars,
            camera: Default::default(),
        })
    }
}

/// Back-and-forth walks across a room, one per avatar, so that avatars
/// cross most straight-line paths between random points.
pub fn crossing_routes(size: [f64; 2], count: usize) -> Vec<Vec<[f64; 2]>> {
    (0..count)
        .map(|i| {
            let f = (i as f64 + 1.0) / (count as f64 + 1.0);
            if i % 2 == 0 {
                let x = 1.0 + f * (size[0] - 2.0);
                vec![[x, 1.0], [x, size[1] - 1.0], [x, 1.0]]
            } else {
                let y = 1.0 + f * (size[1] - 2.0);
                vec![[1.0, y], [size[0] - 1.0, y], [1.0, y]]
            }
        })
        .collect()
}

/// Options for [`write_demo_scene`].
#[derive(Clone, Debug)]
pub struct DemoOptions {
    pub room: RoomSpec,
    pub avatars: usize,
    pub avatar_gaussians: usize,
    pub avatar_speed: f64,
    pub seed: u64,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            room: RoomSpec {
                boxes: vec![[4.4, 3.4, 5.6, 4.6]],
                ..RoomSpec::default()
            },
            avatars: 3,
            avatar_gaussians: 6000,
            avatar_speed: 0.9,
            seed: 0,
        }
    }
}

/// Writes a complete scene directory (PLY, avatar bundles, scene JSON) and
/// returns the config path.
pub fn write_demo_scene(dir: impl AsRef<Path>, opts: &DemoOptions) -> Result<PathBuf, Error> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_gaussian_ply(&opts.room.cloud(), dir.join("scene.ply"))?;
    let mut avatars = Vec::new();
    for (i, route) in crossing_routes(opts.room.size, opts.avatars).iter().enumerate() {
        let b = walking_humanoid(route, opts.avatar_speed, opts.avatar_gaussians, 1, opts.seed + i as u64)?;
        let rel = format!("avatars/a{i}");
        save_avatar_bundle(
            dir.join(&rel),
            &b.canonical,
            &b.weights,
            &b.inv_bind,
            &b.skeleton,
            &b.trajectory,
            Some(&b.capsule_track),
        )?;
        avatars.push(serde_json::json!({
            "bundle": rel,
            "start_offset": 1.5 * i as f64,
            "enabled": true,
            "loop": true,
        }));
    }
    let occ = opts.room.occupancy();
    let cfg = serde_json::json!({
        "scene_ply": "scene.ply",
        "background": [1.0, 1.0, 1.0],
        "navgrid": {
            "procedural": {
                "width": occ.width,
                "height": occ.height,
                "resolution": occ.resolution,
                "origin": occ.origin,
                "obstacles": opts.room.boxes,
            },
            "agent_radius": opts.room.agent_radius,
        },
        "avatars": avatars,
        "camera": { "width": 256, "height": 256, "hfov_deg": 90.0 },
    });
    let path = dir.join("scene.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).expect("static json")).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
