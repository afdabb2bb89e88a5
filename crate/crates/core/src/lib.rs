//! Navigation simulator over 3D gaussian-splat scenes populated with skinned
//! gaussian avatars.
//!
//! The crate is organised the way data flows through one simulation step:
//!
//! - [`assets`] loads scene clouds (PLY), avatar bundles and scene configs.
//! - [`rig`] deforms avatar gaussians with linear blend skinning and samples
//!   trajectories and proxy capsule tracks in time.
//! - [`render`] projects and rasterizes gaussian clouds into RGB-D frames and
//!   composites the avatar layer over the scene layer.
//! - [`nav`] holds the walkability grid, geodesic queries, capsule clearance
//!   and step clipping against dynamic avatar obstacles.
//! - [`tasks`] runs point-goal and avatar-tracking episodes and computes their
//!   rewards; [`metrics`] turns episode traces into evaluation numbers.
//! - [`bench`] measures throughput and memory scaling of the renderer.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assets;
pub mod bench;
pub mod geom;
pub mod metrics;
pub mod nav;
pub mod render;
pub mod rig;
pub mod synth;
pub mod tasks;
pub mod world;

pub use assets::{AvatarBundle, GaussianCloud, SceneConfig};
pub use render::{Camera, FrameRGBD};
pub use world::World;

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Asset(#[from] assets::AssetError),
    #[error(transparent)]
    Render(#[from] render::RenderError),
    #[error(transparent)]
    Rig(#[from] rig::RigError),
    #[error(transparent)]
    Nav(#[from] nav::NavError),
    #[error("episode generation failed: {0}")]
    EpisodeGeneration(String),
    #[error("invalid episode: {0}")]
    InvalidEpisode(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("trace: {0}")]
    Trace(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
