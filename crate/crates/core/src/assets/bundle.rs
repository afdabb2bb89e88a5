//! Avatar bundle directory: `manifest.json` plus raw little-endian float32
//! blobs.
//!
//! | blob             | shape                                   |
//! |------------------|-----------------------------------------|
//! | `canonical.f32`  | pos N×3, f_dc N×3, f_rest N×(K−1)×3, opacity N, log_scale N×3, rot N×4 |
//! | `weights.f32`    | N×J row-major                           |
//! | `inv_bind.f32`   | J×16 row-major 4×4 matrices             |
//! | `trajectory.f32` | T×(J+1)×7, quat wxyz + translation, root last |
//! | `capsules.f32`   | T×C×7, p0, p1, radius                   |

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Isometry3, Matrix3, Matrix4, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::cloud::{sh_coeff_count, GaussianCloud};
use super::{index_list, io_err, AssetError};
use crate::geom::{quat_to_wxyz, quat_wxyz, Capsule};

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub parent: Option<usize>,
    pub rest_pos: Vector3<f64>,
}

/// Joint hierarchy rooted at joint 0. Rest positions are in model space.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    pub joints: Vec<Joint>,
    order: Vec<usize>,
}

impl Skeleton {
    /// Builds a skeleton, checking that parents form a tree rooted at 0.
    pub fn new(joints: Vec<Joint>) -> Result<Self, AssetError> {
        let n = joints.len();
        if n == 0 {
            return Err(AssetError::Validation("skeleton has no joints".into()));
        }
        if joints[0].parent.is_some() {
            return Err(AssetError::Validation("joint 0 must be the root".into()));
        }
        let mut children = vec![Vec::new(); n];
        for (j, joint) in joints.iter().enumerate().skip(1) {
            match joint.parent {
                Some(p) if p < n && p != j => children[p].push(j),
                Some(p) => {
                    return Err(AssetError::Validation(format!(
                        "joint {j} has invalid parent {p}"
                    )))
                }
                None => {
                    return Err(AssetError::Validation(format!(
                        "joint {j} has no parent; only joint 0 may be a root"
                    )))
                }
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0];
        while let Some(j) = stack.pop() {
            order.push(j);
            stack.extend(children[j].iter().rev());
        }
        if order.len() != n {
            return Err(AssetError::Validation(
                "skeleton parent indices contain a cycle".into(),
            ));
        }
        if joints.iter().any(|j| !j.rest_pos.iter().all(|v| v.is_finite())) {
            return Err(AssetError::Validation("non-finite joint rest position".into()));
        }
        Ok(Self { joints, order })
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Joint indices with every parent before its children.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// `(parent, child)` pairs, one per bone, ordered by child index.
    pub fn bones(&self) -> Vec<(usize, usize)> {
        self.joints
            .iter()
            .enumerate()
            .filter_map(|(j, joint)| joint.parent.map(|p| (p, j)))
            .collect()
    }
}

/// Per-frame joint transforms (model space) and a root transform (model to
/// world).
#[derive(Clone, Debug, PartialEq)]
pub struct JointPose {
    pub joints: Vec<Isometry3<f64>>,
    pub root: Isometry3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub fps: f64,
    pub frames: Vec<JointPose>,
}

impl Trajectory {
    /// Duration reported as frame count over fps.
    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    pub fn n_joints(&self) -> usize {
        self.frames.first().map_or(0, |f| f.joints.len())
    }
}

/// Pre-computed proxy capsules, `frames[t][c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapsuleTrack {
    pub frames: Vec<Vec<Capsule>>,
}

impl CapsuleTrack {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_capsules(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    /// `(T, C, 7)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_frames(), self.n_capsules(), 7)
    }
}

#[derive(Clone, Debug)]
pub struct AvatarBundle {
    pub canonical: GaussianCloud,
    /// N×J row-major skinning weights.
    pub weights: Vec<f32>,
    pub inv_bind: Vec<Isometry3<f64>>,
    pub skeleton: Skeleton,
    pub trajectory: Trajectory,
    pub capsule_track: CapsuleTrack,
}

impl AvatarBundle {
    pub fn n_joints(&self) -> usize {
        self.skeleton.len()
    }

    pub fn weight_row(&self, i: usize) -> &[f32] {
        let j = self.n_joints();
        &self.weights[i * j..(i + 1) * j]
    }

    pub fn fps(&self) -> f64 {
        self.trajectory.fps
    }

    pub fn duration(&self) -> f64 {
        self.trajectory.duration()
    }

    /// Bytes held by the bundle's heap arrays (approximate for nested data).
    pub fn payload_bytes(&self) -> usize {
        self.canonical.payload_bytes()
            + self.weights.capacity() * 4
            + self.trajectory.frames.len() * (self.n_joints() + 1) * std::mem::size_of::<Isometry3<f64>>()
            + self.capsule_track.n_frames() * self.capsule_track.n_capsules() * std::mem::size_of::<Capsule>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub parent: i64,
    pub rest_pos: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub n_gaussians: usize,
    pub n_joints: usize,
    pub sh_degree: u8,
    pub fps: f64,
    pub n_frames: usize,
    pub n_capsules: usize,
    pub skeleton: Vec<JointSpec>,
}

/// Everything in a bundle directory; `capsule_track` is absent before baking.
#[derive(Clone, Debug)]
pub struct AvatarParts {
    pub manifest: BundleManifest,
    pub canonical: GaussianCloud,
    pub weights: Vec<f32>,
    pub inv_bind: Vec<Isometry3<f64>>,
    pub skeleton: Skeleton,
    pub trajectory: Trajectory,
    pub capsule_track: Option<CapsuleTrack>,
}

fn read_blob(dir: &Path, name: &str) -> Result<Vec<f32>, AssetError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(AssetError::MissingBlob {
            dir: dir.to_path_buf(),
            name: name.to_string(),
        });
    }
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    if bytes.len() % 4 != 0 {
        return Err(AssetError::UnsupportedLayout(format!(
            "{name}: byte length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect())
}

fn write_blob(path: &Path, values: impl IntoIterator<Item = f32>) -> Result<(), AssetError> {
    let bytes: Vec<u8> = values.into_iter().flat_map(f32::to_le_bytes).collect();
    fs::write(path, bytes).map_err(io_err(path))
}

fn check_len(name: &str, got: usize, expected: usize) -> Result<(), AssetError> {
    if got != expected {
        return Err(AssetError::UnsupportedLayout(format!(
            "{name}: expected {expected} floats, found {got}"
        )));
    }
    Ok(())
}

fn parse_rigid(m: &[f32]) -> Option<Isometry3<f64>> {
    let m = Matrix4::from_row_slice(&m.iter().map(|v| f64::from(*v)).collect::<Vec<_>>());
    if !m.iter().all(|v| v.is_finite()) {
        return None;
    }
    let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
    if bottom.iter().zip([0.0, 0.0, 0.0, 1.0]).any(|(a, b)| (a - b).abs() > 1e-4) {
        return None;
    }
    let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
    if (r.transpose() * r - Matrix3::identity()).abs().max() > 1e-3 || r.determinant() < 0.0 {
        return None;
    }
    let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_eps(&r, 1e-9, 32, Rotation3::identity()));
    Some(Isometry3::from_parts(
        Translation3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]),
        rot,
    ))
}

fn parse_transform(v: &[f32]) -> Option<Isometry3<f64>> {
    let v: Vec<f64> = v.iter().map(|x| f64::from(*x)).collect();
    if !v.iter().all(|x| x.is_finite()) {
        return None;
    }
    let norm = v[..4].iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-8 {
        return None;
    }
    Some(Isometry3::from_parts(
        Translation3::new(v[4], v[5], v[6]),
        quat_wxyz([v[0], v[1], v[2], v[3]]),
    ))
}

fn transform_values(t: &Isometry3<f64>) -> [f32; 7] {
    let q = quat_to_wxyz(&t.rotation);
    let p = t.translation.vector;
    [q[0], q[1], q[2], q[3], p.x, p.y, p.z].map(|v| v as f32)
}

fn parse_capsules(raw: &[f32], n_capsules: usize) -> Result<CapsuleTrack, AssetError> {
    if n_capsules == 0 {
        return Err(AssetError::Validation("bundle declares zero capsules".into()));
    }
    let per_frame = n_capsules * 7;
    if !raw.len().is_multiple_of(per_frame) {
        return Err(AssetError::UnsupportedLayout(format!(
            "capsules.f32: {} floats is not a multiple of C*7 = {per_frame}",
            raw.len()
        )));
    }
    let mut frames = Vec::with_capacity(raw.len() / per_frame);
    let mut bad = Vec::new();
    for (t, chunk) in raw.chunks_exact(per_frame).enumerate() {
        let caps: Vec<Capsule> = chunk
            .chunks_exact(7)
            .map(|c| Capsule::from_slice(&c.iter().map(|v| f64::from(*v)).collect::<Vec<_>>()))
            .collect();
        if caps
            .iter()
            .any(|c| !(c.radius > 0.0) || !c.to_array().iter().all(|v| v.is_finite()))
        {
            bad.push(t);
        }
        frames.push(caps);
    }
    if !bad.is_empty() {
        return Err(AssetError::Validation(format!(
            "non-finite capsule or non-positive radius in frames {}",
            index_list(&bad)
        )));
    }
    Ok(CapsuleTrack { frames })
}

/// Loads a bundle directory, tolerating a missing `capsules.f32`.
pub fn load_avatar_parts(dir: impl AsRef<Path>) -> Result<AvatarParts, AssetError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        return Err(AssetError::MissingBlob {
            dir: dir.to_path_buf(),
            name: "manifest.json".into(),
        });
    }
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: BundleManifest = serde_json::from_str(&text).map_err(|source| AssetError::Json {
        path: manifest_path.clone(),
        source,
    })?;

    let n = manifest.n_gaussians;
    let j = manifest.n_joints;
    if manifest.sh_degree > 3 {
        return Err(AssetError::UnsupportedLayout(format!(
            "sh_degree {} out of range",
            manifest.sh_degree
        )));
    }
    if !(manifest.fps > 0.0) {
        return Err(AssetError::Validation(format!("fps must be positive, got {}", manifest.fps)));
    }
    if manifest.skeleton.len() != j {
        return Err(AssetError::Consistency(format!(
            "manifest declares {j} joints but skeleton lists {}",
            manifest.skeleton.len()
        )));
    }
    let joints = manifest
        .skeleton
        .iter()
        .map(|s| Joint {
            parent: usize::try_from(s.parent).ok(),
            rest_pos: Vector3::from(s.rest_pos),
        })
        .collect();
    let skeleton = Skeleton::new(joints)?;

    let k = sh_coeff_count(manifest.sh_degree);
    let canonical_raw = read_blob(dir, "canonical.f32")?;
    check_len("canonical.f32", canonical_raw.len(), n * (3 + 3 + 3 * (k - 1) + 1 + 3 + 4))?;
    let canonical = decode_canonical(&canonical_raw, n, manifest.sh_degree)?;

    let mut weights = read_blob(dir, "weights.f32")?;
    check_len("weights.f32", weights.len(), n * j)?;
    normalize_weights(&mut weights, j)?;

    let bind_raw = read_blob(dir, "inv_bind.f32")?;
    check_len("inv_bind.f32", bind_raw.len(), j * 16)?;
    let inv_bind = bind_raw
        .chunks_exact(16)
        .enumerate()
        .map(|(i, m)| {
            parse_rigid(m).ok_or_else(|| {
                AssetError::Validation(format!("inv_bind matrix {i} is not a rigid transform"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let traj_raw = read_blob(dir, "trajectory.f32")?;
    let per_frame = (j + 1) * 7;
    if traj_raw.is_empty() || traj_raw.len() % per_frame != 0 {
        return Err(AssetError::UnsupportedLayout(format!(
            "trajectory.f32: {} floats is not a positive multiple of (J+1)*7 = {per_frame}",
            traj_raw.len()
        )));
    }
    let mut frames = Vec::with_capacity(traj_raw.len() / per_frame);
    for (t, chunk) in traj_raw.chunks_exact(per_frame).enumerate() {
        let mut transforms = chunk
            .chunks_exact(7)
            .map(parse_transform)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| AssetError::Validation(format!("invalid transform in trajectory frame {t}")))?;
        let root = transforms.pop().unwrap();
        frames.push(JointPose {
            joints: transforms,
            root,
        });
    }
    let trajectory = Trajectory {
        fps: manifest.fps,
        frames,
    };
    if trajectory.frames.len() != manifest.n_frames {
        return Err(AssetError::Consistency(format!(
            "manifest declares {} frames but trajectory holds {}",
            manifest.n_frames,
            trajectory.frames.len()
        )));
    }

    let capsule_track = if dir.join("capsules.f32").exists() {
        let raw = read_blob(dir, "capsules.f32")?;
        let track = parse_capsules(&raw, manifest.n_capsules)?;
        if track.n_frames() != trajectory.frames.len() {
            return Err(AssetError::Consistency(format!(
                "trajectory has {} frames but capsule track has {}",
                trajectory.frames.len(),
                track.n_frames()
            )));
        }
        Some(track)
    } else {
        None
    };

    Ok(AvatarParts {
        manifest,
        canonical,
        weights,
        inv_bind,
        skeleton,
        trajectory,
        capsule_track,
    })
}

/// Loads a complete, baked avatar bundle.
pub fn load_avatar_bundle(dir: impl AsRef<Path>) -> Result<AvatarBundle, AssetError> {
    let dir = dir.as_ref();
    let parts = load_avatar_parts(dir)?;
    let capsule_track = parts.capsule_track.ok_or_else(|| AssetError::MissingBlob {
        dir: dir.to_path_buf(),
        name: "capsules.f32".into(),
    })?;
    Ok(AvatarBundle {
        canonical: parts.canonical,
        weights: parts.weights,
        inv_bind: parts.inv_bind,
        skeleton: parts.skeleton,
        trajectory: parts.trajectory,
        capsule_track,
    })
}

fn decode_canonical(raw: &[f32], n: usize, degree: u8) -> Result<GaussianCloud, AssetError> {
    let k = sh_coeff_count(degree);
    let (pos, rest) = raw.split_at(n * 3);
    let (dc, rest) = rest.split_at(n * 3);
    let (f_rest, rest) = rest.split_at(n * (k - 1) * 3);
    let (opacity, rest) = rest.split_at(n);
    let (scale, rot) = rest.split_at(n * 3);
    let mut cloud = GaussianCloud::with_capacity(degree, n);
    let mut sh = vec![0f32; k * 3];
    for i in 0..n {
        sh[..3].copy_from_slice(&dc[i * 3..i * 3 + 3]);
        sh[3..].copy_from_slice(&f_rest[i * (k - 1) * 3..(i + 1) * (k - 1) * 3]);
        cloud.push(
            pos[i * 3..i * 3 + 3].try_into().unwrap(),
            &sh,
            opacity[i],
            scale[i * 3..i * 3 + 3].try_into().unwrap(),
            rot[i * 4..i * 4 + 4].try_into().unwrap(),
        );
    }
    cloud.validate()?;
    Ok(cloud)
}

fn normalize_weights(weights: &mut [f32], j: usize) -> Result<(), AssetError> {
    if j == 0 {
        return Ok(());
    }
    let mut bad = Vec::new();
    for (i, row) in weights.chunks_exact_mut(j).enumerate() {
        if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
            bad.push(i);
            continue;
        }
        let sum: f64 = row.iter().map(|w| f64::from(*w)).sum();
        if (sum - 1.0).abs() > 1e-3 {
            bad.push(i);
        } else if sum != 1.0 {
            row.iter_mut().for_each(|w| *w = (f64::from(*w) / sum) as f32);
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(AssetError::Validation(format!(
            "skinning weight rows not a convex combination (sum off by > 1e-3 or negative) at {}",
            index_list(&bad)
        )))
    }
}

/// Writes a capsule track as `capsules.f32`.
pub fn write_capsule_blob(path: impl AsRef<Path>, track: &CapsuleTrack) -> Result<(), AssetError> {
    write_blob(
        path.as_ref(),
        track
            .frames
            .iter()
            .flatten()
            .flat_map(|c| c.to_array().map(|v| v as f32)),
    )
}

/// Writes a bundle directory. `capsule_track` may be omitted for an unbaked
/// bundle.
pub fn save_avatar_bundle(
    dir: impl AsRef<Path>,
    canonical: &GaussianCloud,
    weights: &[f32],
    inv_bind: &[Isometry3<f64>],
    skeleton: &Skeleton,
    trajectory: &Trajectory,
    capsule_track: Option<&CapsuleTrack>,
) -> Result<PathBuf, AssetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = BundleManifest {
        n_gaussians: canonical.len(),
        n_joints: skeleton.len(),
        sh_degree: canonical.sh_degree(),
        fps: trajectory.fps,
        n_frames: trajectory.frames.len(),
        n_capsules: capsule_track.map_or(skeleton.len().saturating_sub(1), CapsuleTrack::n_capsules),
        skeleton: skeleton
            .joints
            .iter()
            .map(|j| JointSpec {
                parent: j.parent.map_or(-1, |p| p as i64),
                rest_pos: j.rest_pos.into(),
            })
            .collect(),
    };
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap())
        .map_err(io_err(&manifest_path))?;

    let n = canonical.len();
    let k = canonical.sh_count();
    let mut blob = Vec::with_capacity(n * (14 + 3 * k));
    blob.extend(canonical.positions.iter().flatten());
    for i in 0..n {
        blob.extend_from_slice(&canonical.sh_of(i)[..3]);
    }
    for i in 0..n {
        blob.extend_from_slice(&canonical.sh_of(i)[3..]);
    }
    blob.extend(&canonical.opacities);
    blob.extend(canonical.log_scales.iter().flatten());
    blob.extend(canonical.rotations.iter().flatten());
    write_blob(&dir.join("canonical.f32"), blob)?;
    write_blob(&dir.join("weights.f32"), weights.iter().copied())?;
    write_blob(
        &dir.join("inv_bind.f32"),
        inv_bind.iter().flat_map(|b| {
            let m = b.to_homogeneous();
            (0..16).map(move |idx| m[(idx / 4, idx % 4)] as f32)
        }),
    )?;
    write_blob(
        &dir.join("trajectory.f32"),
        trajectory.frames.iter().flat_map(|f| {
            f.joints
                .iter()
                .chain(std::iter::once(&f.root))
                .flat_map(transform_values)
                .collect::<Vec<_>>()
        }),
    )?;
    if let Some(track) = capsule_track {
        write_capsule_blob(dir.join("capsules.f32"), track)?;
    }
    Ok(dir.to_path_buf())
}
