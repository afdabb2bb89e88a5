//! On-disk assets: gaussian scene PLY files, avatar bundles and scene configs.
//!
//! Loading is pure; everything returned here is immutable afterwards and can
//! be shared between renderers and episodes behind an `Arc`.

mod bundle;
mod cloud;
mod config;
mod ply;

use std::path::PathBuf;

pub use bundle::{
    load_avatar_bundle, load_avatar_parts, save_avatar_bundle, write_capsule_blob, AvatarBundle,
    AvatarParts, BundleManifest, CapsuleTrack, Joint, JointPose, JointSpec, Skeleton, Trajectory,
};
pub use cloud::{sh_coeff_count, GaussianCloud};
pub use config::{
    load_scene_config, parse_scene_config, AvatarEntry, CameraDefaults, NavGridConfig, SceneConfig,
    DEFAULT_AGENT_RADIUS, DEFAULT_RESOLUTION,
};
pub use ply::{load_gaussian_ply, save_gaussian_ply};

#[derive(Debug, thiserror::Error)]
pub enum AssetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: header line {line} ({content:?}): {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        content: String,
        reason: String,
    },
    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("bundle {}: missing blob {name}", dir.display())]
    MissingBlob { dir: PathBuf, name: String },
    #[error("inconsistent bundle: {0}")]
    Consistency(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{}: invalid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> AssetError {
    let path = path.into();
    move |source| AssetError::Io { path, source }
}

/// Formats a list of offending indices, truncated for very large lists.
pub(crate) fn index_list(indices: &[usize]) -> String {
    const SHOWN: usize = 16;
    let head: Vec<String> = indices.iter().take(SHOWN).map(|i| i.to_string()).collect();
    if indices.len() > SHOWN {
        format!("[{}, ... ({} total)]", head.join(", "), indices.len())
    } else {
        format!("[{}]", head.join(", "))
    }
}
